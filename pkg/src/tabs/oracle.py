"""Brute-force explorer of the concrete semantics on a time grid.

Time advances in steps of ``time_granularity``.  Clock values are kept as
integer multiples of the granularity and compared by plain arithmetic; this
module deliberately does not use the constraint solver, so its verdicts are
an independent check of it.

Clock values beyond the ceiling are normalized so the state space stays
finite: values up to the ceiling are exact, larger ones keep their order and
their mutual distances up to half the ceiling.  With the default ceiling
every constraint of the model (including clock differences) evaluates the
same before and after normalization.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .constraints import Atom, ConstraintSet, LinearTerm
from .model import ConcreteState, Model, Network, Polarity, TimedAutomaton, Transition


@dataclass(frozen=True)
class OracleConfig:
    time_granularity: Fraction = Fraction(1, 2)
    clock_ceiling: Optional[Fraction] = None  # default: 2 * max constant + 1
    int_bound: Optional[int] = None  # default: max constant + 2
    step_bound: int = 10**5

    def __post_init__(self) -> None:
        g = Fraction(self.time_granularity)
        if g <= 0 or g.numerator != 1:
            raise ValueError("time granularity must be 1/m for a positive integer m")
        object.__setattr__(self, "time_granularity", g)
        if self.clock_ceiling is not None:
            object.__setattr__(self, "clock_ceiling", Fraction(self.clock_ceiling))


Step = tuple[ConcreteState, ConcreteState, str]


@dataclass
class OracleResult:
    reachable: set[ConcreteState] = field(default_factory=set)
    fired: set[tuple[str, Transition]] = field(default_factory=set)
    witnessed_steps: set[Step] = field(default_factory=set)
    truncated: bool = False
    saturated: bool = False
    ceiling: Fraction = Fraction(0)
    int_bound: int = 0

    def bounds(self, cfg: OracleConfig) -> OracleConfig:
        """``cfg`` with this run's ceiling and integer bound fixed, for comparable runs."""
        return replace(cfg, clock_ceiling=self.ceiling, int_bound=self.int_bound)

    @property
    def conclusive(self) -> bool:
        return not (self.truncated or self.saturated)

    def locations(self) -> set[tuple[str, ...]]:
        return {s.locs for s in self.reachable}


# -- independent constraint evaluation ----------------------------------------

class _Eval:
    """An atom compiled against the oracle's state layout.

    ``sum(c * clock_units) + m * (sum(c * int) + k)  rel  0``
    """

    __slots__ = ("clock_terms", "int_terms", "const", "rel", "m")

    def __init__(self, atom: Atom, clock_index: dict[str, int], int_index: dict[str, int], m: int):
        self.clock_terms = []
        self.int_terms = []
        for v, c in atom.term.coeffs:
            if v.name in clock_index:
                self.clock_terms.append((clock_index[v.name], c))
            else:
                self.int_terms.append((int_index[v.name], c))
        self.const = atom.term.constant
        self.rel = atom.rel
        self.m = m

    def __call__(self, clocks: Sequence[int], ints: Sequence[int]) -> bool:
        total = self.const
        for i, c in self.int_terms:
            total += c * ints[i]
        total *= self.m
        for i, c in self.clock_terms:
            total += c * clocks[i]
        if self.rel == "<=":
            return total <= 0
        if self.rel == "<":
            return total < 0
        return total == 0


def _all(checks: Sequence[_Eval], clocks, ints) -> bool:
    for chk in checks:
        if not chk(clocks, ints):
            return False
    return True


def _atoms(model: Network) -> list[Atom]:
    out: list[Atom] = []
    for a in model.components:
        for loc in a.locations:
            out.extend(loc.invariant)
        for t in a.transitions:
            out.extend(t.guard)
    return out


def max_constant(model: Model, extra: Iterable[Atom] = ()) -> int:
    """Largest absolute constant in any constraint or reset of the model."""
    net = model if isinstance(model, Network) else Network((model,))
    k = 0
    for atom in list(_atoms(net)) + list(extra):
        k = max(k, abs(atom.term.constant))
    for a in net.components:
        for t in a.transitions:
            for _, value in t.resets:
                k = max(k, abs(value.constant))
    return k


def _clock_bound(model: Network, extra: Iterable[Atom], int_bound: int) -> int:
    """Largest clock constant, counting integer variables at their bound."""
    k = 0
    for atom in list(_atoms(model)) + list(extra):
        c = abs(atom.term.constant)
        c += sum(abs(coef) * int_bound for v, coef in atom.term.coeffs if not v.clock)
        if any(v.clock for v in atom.vars):
            k = max(k, c)
    for a in model.components:
        for t in a.transitions:
            for v, value in t.resets:
                if v.clock:
                    k = max(k, abs(value.constant))
    return k


def _normalize(clocks: tuple[int, ...], bound: int, gap_cap: int) -> tuple[int, ...]:
    if not clocks or max(clocks) <= bound:
        return clocks
    order = sorted(range(len(clocks)), key=lambda i: clocks[i])
    out = list(clocks)
    prev, prev_new = bound, bound
    for i in order:
        v = clocks[i]
        if v <= bound:
            prev, prev_new = v, v
            continue
        gap = v - prev
        new = prev_new + gap if gap <= gap_cap else max(bound + 1, prev_new + gap_cap + 1)
        out[i] = new
        prev, prev_new = v, new
    return tuple(out)


@dataclass
class _Move:
    comps: tuple[int, ...]
    targets: tuple[str, ...]
    guard: list[_Eval]
    clock_resets: list[tuple[int, int]]
    int_resets: list[tuple[int, LinearTerm]]
    fired: tuple[tuple[str, Transition], ...]
    kind: str


def explore(model: Model, cfg: OracleConfig = OracleConfig(), extra: Iterable[Atom] = ()) -> OracleResult:
    """Breadth-first exploration from the initial location with all variables at 0.

    A bare :class:`TimedAutomaton` is explored as an open system: every
    transition may fire, whatever its label.  In a :class:`Network` a send
    and a matching receive in two components fire together, and unmatched
    ones never fire.  ``extra`` atoms are only used to size the ceiling, so
    that evaluating them on normalized states stays exact.
    """
    open_system = isinstance(model, TimedAutomaton)
    net = Network((model,)) if open_system else model
    extra = list(extra)
    m = cfg.time_granularity.denominator
    const = max_constant(net, extra)
    int_bound = cfg.int_bound if cfg.int_bound is not None else const + 2
    if cfg.clock_ceiling is not None:
        ceiling = cfg.clock_ceiling
    else:
        ceiling = Fraction(2 * _clock_bound(net, extra, int_bound) + 1)
    bound = int(ceiling * m)
    gap_cap = bound // 2

    clock_names = [v.name for a in net.components for v in a.variables if v.clock]
    int_names = [v.name for a in net.components for v in a.variables if not v.clock]
    ci = {n: i for i, n in enumerate(clock_names)}
    ii = {n: i for i, n in enumerate(int_names)}

    def compile_cs(cs: ConstraintSet) -> list[_Eval]:
        return [_Eval(a, ci, ii, m) for a in cs]

    inv = [{loc.id: compile_cs(loc.invariant) for loc in a.locations} for a in net.components]

    def move(parts: Sequence[tuple[int, Transition]], kind: str) -> _Move:
        guard, cres, ires = [], [], []
        for _, t in parts:
            guard += compile_cs(t.guard)
            for v, value in t.resets:
                if v.clock:
                    cres.append((ci[v.name], value.constant * m))
                else:
                    ires.append((ii[v.name], value))
        return _Move(
            tuple(i for i, _ in parts), tuple(t.target for _, t in parts), guard, cres, ires,
            tuple((net.components[i].name, t) for i, t in parts), kind,
        )

    # moves available per (component, location)
    local: list[dict[str, list[_Move]]] = []
    for i, a in enumerate(net.components):
        table: dict[str, list[_Move]] = {}
        for t in a.transitions:
            if open_system or not t.synchronizing:
                table.setdefault(t.source, []).append(move([(i, t)], "discrete"))
        local.append(table)
    sync: list[tuple[int, Transition, int, Transition]] = []
    if not open_system:
        for i, a in enumerate(net.components):
            for t in a.transitions:
                if t.event is None or t.event.polarity is not Polarity.SEND:
                    continue
                for j, b in enumerate(net.components):
                    if j == i:
                        continue
                    for u in b.transitions:
                        if u.event is not None and u.event.polarity is Polarity.RECEIVE and u.event.name == t.event.name:
                            sync.append((i, t, j, u))
    sync_moves = [(i, t.source, j, u.source, move([(i, t), (j, u)], "sync")) for i, t, j, u in sync]

    res = OracleResult(ceiling=ceiling, int_bound=int_bound)

    def inv_ok(locs, clocks, ints) -> bool:
        return all(_all(inv[k][locs[k]], clocks, ints) for k in range(len(locs)))

    def to_state(s) -> ConcreteState:
        locs, clocks, ints = s
        vals = {n: Fraction(clocks[i], m) for n, i in ci.items()}
        vals.update({n: Fraction(ints[i]) for n, i in ii.items()})
        return ConcreteState.make(locs, vals)

    init = (tuple(a.initial for a in net.components), (0,) * len(clock_names), (0,) * len(int_names))
    if not inv_ok(*init):
        return res
    seen = {init}
    queue = deque([init])
    raw_steps: list[tuple[tuple, tuple, str]] = []

    def visit(src, dst, kind) -> None:
        raw_steps.append((src, dst, kind))
        key = (dst[0], _normalize(dst[1], bound, gap_cap), dst[2])
        if key in seen:
            return
        if len(seen) >= cfg.step_bound:
            res.truncated = True
            return
        seen.add(key)
        queue.append(key)

    while queue:
        s = queue.popleft()
        locs, clocks, ints = s
        # delay by one grid step
        if clock_names:
            later = tuple(c + 1 for c in clocks)
            if inv_ok(locs, later, ints):
                visit(s, (locs, later, ints), "delay")
        candidates = []
        for k, table in enumerate(local):
            candidates.extend(table.get(locs[k], ()))
        for i, src_i, j, src_j, mv in sync_moves:
            if locs[i] == src_i and locs[j] == src_j:
                candidates.append(mv)
        for mv in candidates:
            if not _all(mv.guard, clocks, ints):
                continue
            new_clocks = list(clocks)
            for idx, value in mv.clock_resets:
                new_clocks[idx] = value
            new_ints = list(ints)
            for idx, term in mv.int_resets:
                new_ints[idx] = term.constant + sum(c * ints[ii[v.name]] for v, c in term.coeffs)
            if any(abs(v) > int_bound for v in new_ints):
                res.saturated = True
                continue
            new_locs = list(locs)
            for comp, target in zip(mv.comps, mv.targets):
                new_locs[comp] = target
            dst = (tuple(new_locs), tuple(new_clocks), tuple(new_ints))
            if not inv_ok(*dst):
                continue
            res.fired.update(mv.fired)
            visit(s, dst, mv.kind)

    cache: dict[tuple, ConcreteState] = {}

    def conv(s) -> ConcreteState:
        cs = cache.get(s)
        if cs is None:
            cs = cache[s] = to_state(s)
        return cs

    res.reachable = {conv(s) for s in seen}
    res.witnessed_steps = {(conv(a), conv(b), kind) for a, b, kind in raw_steps}
    return res


def diff_reachability(a1: Model, a2: Model, cfg: OracleConfig = OracleConfig(),
                      extra: Iterable[Atom] = ()) -> Optional[bool]:
    """Whether both models reach the same states by the same steps; None when inconclusive.

    The second run reuses the first run's bounds so both are normalized alike.
    """
    r1 = explore(a1, cfg, extra)
    r2 = explore(a2, r1.bounds(cfg))
    if not (r1.conclusive and r2.conclusive):
        return None
    return r1.reachable == r2.reachable and r1.witnessed_steps == r2.witnessed_steps
