"""Predicate abstraction over the strengthened location invariants.

The predicates are the atoms of all strengthened invariants.  An abstract
state pairs a location with a cube over the predicates that the location
does not already own; only cubes consistent with the location's invariant
are kept.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .cipm import CipmResult, NetworkCipmResult
from .constraints import (
    DEFAULT_LIMIT,
    Atom,
    ConstraintSet,
    Cube,
    LinearTerm,
    Var,
    satisfiable,
)
from .model import ConcreteState, TimedAutomaton, Transition, vector_id

Literal = tuple[Atom, bool]

DELAY = "delay"
DELAY_VAR = Var("delay@", clock=True)


@dataclass(frozen=True)
class PredicatePool:
    """The global predicate set ``all`` and each location's own atoms."""

    all: tuple[Atom, ...]
    per_location: Mapping[str, ConstraintSet]

    def name(self, p: Atom) -> str:
        return f"p{self.all.index(p)}"

    def free(self, lid: str) -> tuple[Atom, ...]:
        """Predicates a cube at ``lid`` ranges over (those ``lid`` does not own)."""
        owned = set(self.per_location[lid])
        return tuple(p for p in self.all if p not in owned)

    def legend(self) -> dict[str, str]:
        return {self.name(p): str(p) for p in self.all}


@dataclass(frozen=True, order=True)
class AbstractState:
    location: str
    cube: Cube = Cube()

    def label(self, pool: PredicatePool) -> str:
        """Location plus every predicate's sign, owned predicates counted positive."""
        owned = set(pool.per_location[self.location])
        signs = []
        for p in pool.all:
            positive = p in owned or self.cube.sign(p)
            signs.append(pool.name(p) if positive else "!" + pool.name(p))
        return f"({self.location}, {' '.join(signs)})" if signs else f"({self.location})"

    def matches(self, pool: PredicatePool, location: str, signs: Mapping[str, bool]) -> bool:
        """Whether this is the state at ``location`` with the given predicate signs (by name)."""
        if self.location != location:
            return False
        owned = set(pool.per_location[location])
        for p in pool.all:
            want = signs.get(pool.name(p))
            if want is None:
                continue
            have = True if p in owned else self.cube.sign(p)
            if have != want:
                return False
        return True


@dataclass
class AbstractionStats:
    abstract_states: int = 0
    reachable: int = 0
    abstract_transitions: int = 0
    naive_paired: int = 0
    naive_unfiltered: int = 0
    pruned_transitions: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


@dataclass
class AbstractAutomaton:
    states: list[AbstractState]
    initial: list[AbstractState]
    transitions: dict[tuple[AbstractState, AbstractState], list[str]]
    reachable: set[AbstractState]
    stats: AbstractionStats
    pool: PredicatePool
    automaton: TimedAutomaton

    def successors(self, s: AbstractState) -> list[AbstractState]:
        return [d for (src, d) in self.transitions if src == s]

    def find(self, location: str, **signs: bool) -> AbstractState:
        """The unique state at ``location`` matching ``signs`` such as ``p0=True``."""
        hits = [s for s in self.states if s.matches(self.pool, location, signs)]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} abstract states match {location} {signs}")
        return hits[0]

    def image(self, lid: str, valuation: Mapping[Var, object]) -> Optional[AbstractState]:
        """The abstract state of the concrete state ``(lid, valuation)``, if any."""
        if lid not in self.pool.per_location or not self.pool.per_location[lid].holds(valuation):
            return None
        lits = tuple((p, p.holds(valuation)) for p in self.pool.free(lid))
        s = AbstractState(lid, Cube(lits))
        return s if s in self._index else None

    @property
    def _index(self) -> set[AbstractState]:
        cached = self.__dict__.get("_state_set")
        if cached is None or len(cached) != len(self.states):
            cached = set(self.states)
            self.__dict__["_state_set"] = cached
        return cached


# -- cubes -------------------------------------------------------------------

def _sat_literals(base: Sequence[Atom], literals: Iterable[Literal], limit: int) -> bool:
    """Satisfiability of ``base`` and the literals; negated equalities split into cases."""
    cases: list[list[Atom]] = [list(base)]
    for p, positive in literals:
        options = [p] if positive else p.negate()
        cases = [c + [o] for c in cases for o in options]
    return any(satisfiable(c, limit) for c in cases)


def predicate_pool(r: Union[CipmResult, NetworkCipmResult]) -> PredicatePool:
    """Predicates from all strengthened invariants, in location order."""
    r = _composed(r)
    seen: list[Atom] = []
    for loc in r.pruned.locations:
        for atom in r.new_invariants[loc.id]:
            if atom not in seen:
                seen.append(atom)
    return PredicatePool(tuple(seen), dict(r.new_invariants))


def feasible_cubes(lid: str, pool: PredicatePool, limit: int = DEFAULT_LIMIT) -> list[Cube]:
    """Cubes over the predicates ``lid`` does not own that are consistent with its invariant.

    Enumerated depth first, positive literal before negative; branches that
    are already unsatisfiable are cut early.
    """
    base = pool.per_location[lid].atoms
    if not satisfiable(base, limit):
        return []
    free = pool.free(lid)
    out: list[Cube] = []

    def dfs(prefix: tuple[Literal, ...]) -> None:
        if len(prefix) == len(free):
            out.append(Cube(prefix))
            return
        p = free[len(prefix)]
        for sign in (True, False):
            lits = prefix + ((p, sign),)
            if _sat_literals(base, lits, limit):
                dfs(lits)

    dfs(())
    return out


def abstract_states(r: Union[CipmResult, NetworkCipmResult], pool: Optional[PredicatePool] = None,
                    limit: int = DEFAULT_LIMIT) -> list[AbstractState]:
    r = _composed(r)
    pool = pool or predicate_pool(r)
    return [AbstractState(lid, q) for lid in r.pruned.location_ids for q in feasible_cubes(lid, pool, limit)]


def naive_counts(r: Union[CipmResult, NetworkCipmResult], pool: Optional[PredicatePool] = None,
                 limit: int = DEFAULT_LIMIT) -> tuple[int, int]:
    """State counts without pairing cubes with invariants.

    Every location is paired with every satisfiable cube over the full
    predicate set (first number), or with every cube at all (second).
    """
    r = _composed(r)
    pool = pool or predicate_pool(r)
    n = len(r.pruned.locations)
    sat_cubes = 0

    def dfs(prefix: tuple[Literal, ...]) -> None:
        nonlocal sat_cubes
        if len(prefix) == len(pool.all):
            sat_cubes += 1
            return
        p = pool.all[len(prefix)]
        for sign in (True, False):
            lits = prefix + ((p, sign),)
            if _sat_literals((), lits, limit):
                dfs(lits)

    dfs(())
    return n * sat_cubes, n * 2 ** len(pool.all)


# -- transitions -------------------------------------------------------------

def _state_literals(s: AbstractState, pool: PredicatePool) -> list[Literal]:
    return [(a, True) for a in pool.per_location[s.location]] + list(s.cube.literals)


def _map_literals(lits: Iterable[Literal], mapping: Mapping[Var, LinearTerm]) -> list[Literal]:
    return [(p.substitute(mapping), sign) for p, sign in lits]


def discrete_witness(src: AbstractState, dst: AbstractState, t: Transition, pool: PredicatePool,
                     limit: int = DEFAULT_LIMIT) -> bool:
    """Some valuation in ``src`` fires ``t`` and lands in ``dst``.

    One query over the pre-state variables: the destination literals are
    pulled back through the resets, every other variable keeps its value.
    """
    if t.source != src.location or t.target != dst.location:
        return False
    mapping = {v: value for v, value in t.resets}
    lits = _state_literals(src, pool) + [(g, True) for g in t.guard]
    lits += _map_literals(_state_literals(dst, pool), mapping)
    return _sat_literals((), lits, limit)


def delay_witness(src: AbstractState, dst: AbstractState, pool: PredicatePool,
                  limit: int = DEFAULT_LIMIT) -> bool:
    """Some valuation in ``src`` reaches ``dst`` by letting time pass.

    Both endpoints satisfy the (convex) invariant, so every intermediate
    point does too.
    """
    if src.location != dst.location:
        return False
    if src == dst:
        return _sat_literals((), _state_literals(src, pool), limit)
    d = DELAY_VAR
    dst_lits = _state_literals(dst, pool)
    clocks = {v for p, _ in dst_lits for v in p.vars if v.clock}
    mapping = {x: LinearTerm.of({x: 1, d: 1}) for x in clocks}
    return _sat_literals((), _state_literals(src, pool) + _map_literals(dst_lits, mapping), limit)


def transition_labels(src: AbstractState, dst: AbstractState, a: TimedAutomaton, pool: PredicatePool,
                      limit: int = DEFAULT_LIMIT) -> list[str]:
    """Every reason (``delay`` or a transition label) for an abstract edge src -> dst."""
    labels = []
    if delay_witness(src, dst, pool, limit):
        labels.append(DELAY)
    for t in a.outgoing(src.location):
        if t.target == dst.location and discrete_witness(src, dst, t, pool, limit):
            labels.append(t.label() or "tau")
    return labels


def abstract_transition_exists(src: AbstractState, dst: AbstractState, a: TimedAutomaton,
                               pool: PredicatePool, limit: int = DEFAULT_LIMIT) -> bool:
    if delay_witness(src, dst, pool, limit):
        return True
    return any(
        discrete_witness(src, dst, t, pool, limit)
        for t in a.outgoing(src.location) if t.target == dst.location
    )


def next_states(s: AbstractState, a: TimedAutomaton, pool: PredicatePool,
                states: Optional[Sequence[AbstractState]] = None,
                limit: int = DEFAULT_LIMIT) -> list[AbstractState]:
    """All abstract successors of ``s`` among ``states`` (default: all feasible states)."""
    if states is None:
        states = [AbstractState(lid, q) for lid in a.location_ids for q in feasible_cubes(lid, pool, limit)]
    targets = {t.target for t in a.outgoing(s.location)} | {s.location}
    return [d for d in states if d.location in targets and abstract_transition_exists(s, d, a, pool, limit)]


# keep the familiar name available
next = next_states  # noqa: A001


def _zero(a: TimedAutomaton) -> list[Literal]:
    return [(Atom.make(LinearTerm.var(v), "==", 0), True) for v in a.variables]


def is_initial(s: AbstractState, a: TimedAutomaton, pool: PredicatePool, limit: int = DEFAULT_LIMIT) -> bool:
    return s.location == a.initial and _sat_literals((), _state_literals(s, pool) + _zero(a), limit)


def _composed(r: Union[CipmResult, NetworkCipmResult]) -> CipmResult:
    return r.composed if isinstance(r, NetworkCipmResult) else r


def build_abstraction(r: Union[CipmResult, NetworkCipmResult], a: Optional[TimedAutomaton] = None,
                      limit: int = DEFAULT_LIMIT) -> AbstractAutomaton:
    """The abstract automaton of ``a`` (default: the pruned automaton) under ``r``'s invariants."""
    r = _composed(r)
    a = r.pruned if a is None else a
    pool = predicate_pool(r)
    states = abstract_states(r, pool, limit)
    by_loc: dict[str, list[AbstractState]] = {}
    for s in states:
        by_loc.setdefault(s.location, []).append(s)
    transitions: dict[tuple[AbstractState, AbstractState], list[str]] = {}
    for s in states:
        targets = [s.location] + [t.target for t in a.outgoing(s.location)]
        for lid in dict.fromkeys(targets):
            for d in by_loc.get(lid, ()):
                labels = transition_labels(s, d, a, pool, limit)
                if labels:
                    transitions[(s, d)] = labels
    initial = [s for s in by_loc.get(a.initial, ()) if is_initial(s, a, pool, limit)]
    succ: dict[AbstractState, list[AbstractState]] = {}
    for src, dst in transitions:
        succ.setdefault(src, []).append(dst)
    reachable = set(initial)
    queue = deque(initial)
    while queue:
        for d in succ.get(queue.popleft(), ()):
            if d not in reachable:
                reachable.add(d)
                queue.append(d)
    paired, unfiltered = naive_counts(r, pool, limit)
    stats = AbstractionStats(
        abstract_states=len(states),
        reachable=len(reachable),
        abstract_transitions=len(transitions),
        naive_paired=paired,
        naive_unfiltered=unfiltered,
        pruned_transitions=len(r.removed),
    )
    return AbstractAutomaton(states, initial, transitions, reachable, stats, pool, a)


# -- simulation against concrete runs ------------------------------------------

@dataclass
class SimulationReport:
    checked_states: int = 0
    checked_steps: int = 0
    unmapped: list[str] = field(default_factory=list)
    unreachable_images: list[str] = field(default_factory=list)
    missing_transitions: list[str] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return len(self.unmapped) + len(self.unreachable_images) + len(self.missing_transitions)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _valuation(a: TimedAutomaton, state: ConcreteState) -> dict[Var, object]:
    values = state.valuation
    return {v: values[v.name] for v in a.variables}


def simulate_check(abst: AbstractAutomaton, reachable: Iterable[ConcreteState],
                   steps: Iterable[tuple[ConcreteState, ConcreteState, str]] = ()) -> SimulationReport:
    """Check that concrete states and steps are covered by the abstraction.

    Every concrete state must map to a reachable abstract state and every
    concrete step to an abstract transition between the images.
    """
    rep = SimulationReport()
    images: dict[ConcreteState, Optional[AbstractState]] = {}

    def image(cs: ConcreteState) -> Optional[AbstractState]:
        if cs not in images:
            images[cs] = abst.image(vector_id(cs.locs), _valuation(abst.automaton, cs))
        return images[cs]

    for cs in sorted(reachable):
        rep.checked_states += 1
        img = image(cs)
        if img is None:
            rep.unmapped.append(str(cs))
        elif img not in abst.reachable:
            rep.unreachable_images.append(f"{cs} -> {img.label(abst.pool)}")
    for src, dst, kind in sorted(steps):
        rep.checked_steps += 1
        a, b = image(src), image(dst)
        if a is None or b is None:
            continue  # already reported as unmapped
        if (a, b) not in abst.transitions:
            rep.missing_transitions.append(
                f"{kind} step {src} -> {dst} has no abstract edge {a.label(abst.pool)} -> {b.label(abst.pool)}"
            )
    return rep
