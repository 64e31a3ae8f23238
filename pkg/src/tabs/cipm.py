"""Invariant strengthening and idle-transition pruning.

Each location's invariant is strengthened with the constraints that every
way of entering it imposes, after letting time pass.  A transition that can
never fire under the current invariants is removed, which may strengthen
other invariants in turn.  Every intermediate invariant is sound, so the
iteration can be stopped at any point without losing soundness.
"""

from __future__ import annotations

import enum
import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .constraints import (
    DEFAULT_LIMIT,
    TRUE,
    Atom,
    ConstraintSet,
    LinearTerm,
    Var,
    apply_reset,
    delay_closure,
    entails,
    equivalent,
    reduce,
    satisfiable,
)
from .model import Network, TimedAutomaton, Transition, compose, product_locations, vector_id

log = logging.getLogger(__name__)


class IdleReason(enum.Enum):
    UNSATISFIABLE_GUARD = "UnsatisfiableGuard"
    GUARD_CONTRADICTS_SOURCE_INVARIANT = "GuardContradictsSourceInvariant"
    POST_VIOLATES_TARGET_INVARIANT = "PostViolatesTargetInvariant"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Removal:
    transition: Transition
    reason: IdleReason

    def __str__(self) -> str:
        return f"{self.transition}: {self.reason}"


@dataclass
class CipmResult:
    original: TimedAutomaton
    pruned: TimedAutomaton
    new_invariants: dict[str, ConstraintSet]
    removed: list[Removal] = field(default_factory=list)
    unreachable: frozenset[str] = frozenset()
    iterations: int = 0
    converged: bool = True
    warnings: list[str] = field(default_factory=list)

    def invariant(self, lid: str) -> ConstraintSet:
        return self.new_invariants[lid]

    @property
    def annotated(self) -> TimedAutomaton:
        """The pruned automaton with ``new_invariant`` filled in."""
        locs = tuple(replace(loc, new_invariant=self.new_invariants[loc.id]) for loc in self.pruned.locations)
        return replace(self.pruned, locations=locs)


def is_idle(t: Transition, src_inv: ConstraintSet, tgt_inv: ConstraintSet,
            limit: int = DEFAULT_LIMIT) -> Optional[IdleReason]:
    """Why ``t`` can never fire between the given invariants, or None."""
    if not satisfiable(t.guard, limit):
        return IdleReason.UNSATISFIABLE_GUARD
    enabled = src_inv & t.guard
    if not satisfiable(enabled, limit):
        return IdleReason.GUARD_CONTRADICTS_SOURCE_INVARIANT
    if not satisfiable(apply_reset(enabled, t.resets, limit) & tgt_inv, limit):
        return IdleReason.POST_VIOLATES_TARGET_INVARIANT
    return None


def propagate(t: Transition, src_inv: ConstraintSet, clocks: Optional[Iterable[Var]] = None,
              limit: int = DEFAULT_LIMIT) -> ConstraintSet:
    """Constraint imposed on ``t.target`` by entering through ``t`` and then waiting."""
    post = apply_reset(src_inv & t.guard, t.resets, limit)
    return reduce(delay_closure(post, clocks), limit=limit)


def initial_condition(a: TimedAutomaton) -> ConstraintSet:
    """What holds in the initial location: all variables start at zero, then time passes."""
    zero = ConstraintSet(tuple(Atom.make(LinearTerm.var(v), "==", 0) for v in a.variables))
    return delay_closure(zero, a.clocks)


def _join(props: Sequence[ConstraintSet], limit: int) -> ConstraintSet:
    """Atoms (drawn from the propagations) entailed by every propagation."""
    if not props:
        return TRUE
    candidates: list[Atom] = []
    for p in props:
        for atom in p:
            if atom not in candidates:
                candidates.append(atom)
    kept = [
        atom for atom in candidates
        if all(atom in p or entails(p, ConstraintSet((atom,)), limit) for p in props)
    ]
    return ConstraintSet(tuple(kept))


def location_invariant(l: str, incoming: Sequence[tuple[Transition, ConstraintSet]],
                       original: ConstraintSet, clocks: Optional[Iterable[Var]] = None,
                       entry: Optional[ConstraintSet] = None,
                       limit: int = DEFAULT_LIMIT) -> ConstraintSet:
    """``original`` strengthened by what every entry into ``l`` guarantees.

    ``incoming`` pairs each non-idle transition into ``l`` with its source
    invariant; ``entry`` is the extra initial condition when ``l`` is the
    initial location.  With no entries at all, ``original`` is returned.
    """
    clocks = None if clocks is None else tuple(clocks)
    props = [propagate(t, inv, clocks, limit) for t, inv in incoming if t.target == l]
    if entry is not None:
        props.append(entry)
    return reduce(original & _join(props, limit), protected=len(original), limit=limit)


def reachable_locations(a: TimedAutomaton, transitions: Iterable[Transition]) -> set[str]:
    """Locations reachable from the initial one in the transition graph."""
    succ: dict[str, list[str]] = {}
    for t in transitions:
        succ.setdefault(t.source, []).append(t.target)
    seen = {a.initial}
    stack = [a.initial]
    while stack:
        for nxt in succ.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def iteration_bound(a: TimedAutomaton) -> int:
    atoms = sum(len(loc.invariant) for loc in a.locations) + sum(len(t.guard) for t in a.transitions)
    return len(a.locations) * (1 + atoms)


def cipm(a: TimedAutomaton, limit: int = DEFAULT_LIMIT, max_iterations: Optional[int] = None) -> CipmResult:
    """Strengthen the invariants of ``a`` and prune its idle transitions.

    Locations are processed from a FIFO worklist in declaration order.  When
    the iteration bound is hit, locations still waiting for an update fall
    back to their original invariant and a warning is recorded.
    """
    ids = list(a.location_ids)
    original = {loc.id: loc.invariant for loc in a.locations}
    ia = dict(original)
    entry = initial_condition(a)
    clocks = a.clocks
    active: list[Transition] = []
    removed: list[Removal] = []

    for t in a.transitions:
        reason = is_idle(t, ia[t.source], ia[t.target], limit)
        if reason is None:
            active.append(t)
        else:
            removed.append(Removal(t, reason))
    reach = reachable_locations(a, active)

    bound = iteration_bound(a) if max_iterations is None else max_iterations
    queue = deque(ids)
    queued = set(ids)
    iterations = 0

    def push(lid: str) -> None:
        if lid not in queued:
            queued.add(lid)
            queue.append(lid)

    while queue and iterations < bound:
        iterations += 1
        l = queue.popleft()
        queued.discard(l)
        if l not in reach:
            continue
        incoming = [(t, ia[t.source]) for t in active if t.target == l and t.source in reach]
        join = location_invariant(
            l, incoming, TRUE, clocks, entry if l == a.initial else None, limit
        )
        new = reduce(original[l] & ia[l] & join, protected=len(original[l]), limit=limit)
        if equivalent(new, ia[l], limit):
            continue
        ia[l] = new
        # the stronger invariant may make transitions into or out of l idle
        still = []
        for t in active:
            reason = None
            if l in (t.source, t.target):
                reason = is_idle(t, ia[t.source], ia[t.target], limit)
            if reason is None:
                still.append(t)
            else:
                removed.append(Removal(t, reason))
                push(t.target)
        if len(still) != len(active):
            active = still
            new_reach = reachable_locations(a, active)
            for t in active:
                if t.source in reach and t.source not in new_reach:
                    push(t.target)
            reach = new_reach
        for t in active:
            if t.source == l:
                push(t.target)

    warnings = []
    converged = not queue
    if not converged:
        pending = [lid for lid in ids if lid in queued]
        msg = (f"{a.name}: no fixpoint after {iterations} iterations; "
               f"using original invariants for {', '.join(pending)}")
        log.warning(msg)
        warnings.append(msg)
        for lid in pending:
            ia[lid] = original[lid]

    return CipmResult(
        original=a,
        pruned=a.with_transitions(active),
        new_invariants=ia,
        removed=removed,
        unreachable=frozenset(lid for lid in ids if lid not in reach),
        iterations=iterations,
        converged=converged,
        warnings=warnings,
    )


@dataclass
class NetworkCipmResult:
    original: Network
    pruned: Network
    invariants: dict[tuple[str, ...], ConstraintSet]
    components: list[CipmResult]
    composed: CipmResult

    @property
    def removed(self) -> list[Removal]:
        return [r for c in self.components for r in c.removed]


def cipm_network(n: Network | TimedAutomaton, limit: int = DEFAULT_LIMIT) -> NetworkCipmResult:
    """Run :func:`cipm` on every component and combine the results.

    The invariant of a location vector is the conjunction of the component
    invariants.  ``composed`` describes the explicit product (or the single
    component itself) and is what the abstraction consumes.
    """
    if isinstance(n, TimedAutomaton):
        n = Network((n,))
    results = [cipm(a, limit) for a in n.components]
    pruned = Network(tuple(r.pruned for r in results))
    if len(results) == 1:
        return NetworkCipmResult(n, pruned, {(lid,): inv for lid, inv in results[0].new_invariants.items()},
                                 results, results[0])
    vectors = product_locations(n)
    invariants = {
        vec: ConstraintSet(tuple(atom for r, lid in zip(results, vec) for atom in r.new_invariants[lid]))
        for vec in vectors
    }
    product = compose(pruned)
    full = compose(n)
    product_reach = reachable_locations(product, product.transitions)
    composed = CipmResult(
        original=full,
        pruned=product,
        new_invariants={vector_id(vec): inv for vec, inv in invariants.items()},
        removed=[rm for r in results for rm in r.removed],
        unreachable=frozenset(vector_id(v) for v in vectors if vector_id(v) not in product_reach),
        iterations=sum(r.iterations for r in results),
        converged=all(r.converged for r in results),
        warnings=[w for r in results for w in r.warnings],
    )
    return NetworkCipmResult(n, pruned, invariants, results, composed)
