"""Timed automata, networks of timed automata, and concrete states."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .constraints import TRUE, ConstraintSet, LinearTerm, Var

Reset = tuple[Var, LinearTerm]


class Polarity(enum.Enum):
    SEND = "!"
    RECEIVE = "?"
    INTERNAL = ""


@dataclass(frozen=True)
class Event:
    name: str
    polarity: Polarity = Polarity.INTERNAL

    def __str__(self) -> str:
        return f"{self.polarity.value}{self.name}"


@dataclass(frozen=True)
class VariableDecl:
    name: str
    kind: str  # "clock" or "int"

    @property
    def var(self) -> Var:
        return Var(self.name, self.kind == "clock")


@dataclass(frozen=True)
class Location:
    id: str
    invariant: ConstraintSet = TRUE
    new_invariant: Optional[ConstraintSet] = None


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    event: Optional[Event] = None
    guard: ConstraintSet = TRUE
    resets: tuple[Reset, ...] = ()

    @property
    def synchronizing(self) -> bool:
        return self.event is not None and self.event.polarity is not Polarity.INTERNAL

    def label(self) -> str:
        parts = []
        if self.event is not None:
            parts.append(str(self.event))
        if self.guard:
            parts.append(str(self.guard))
        if self.resets:
            parts.append(", ".join(f"{v} := {t}" for v, t in self.resets))
        return "; ".join(parts)

    def __str__(self) -> str:
        label = self.label()
        return f"{self.source} -> {self.target}" + (f" [{label}]" if label else "")


@dataclass(frozen=True)
class TimedAutomaton:
    name: str
    locations: tuple[Location, ...]
    initial: str
    vars: tuple[VariableDecl, ...] = ()
    transitions: tuple[Transition, ...] = ()

    @property
    def events(self) -> frozenset[str]:
        return frozenset(t.event.name for t in self.transitions if t.event is not None)

    @property
    def variables(self) -> tuple[Var, ...]:
        return tuple(d.var for d in self.vars)

    @property
    def clocks(self) -> tuple[Var, ...]:
        return tuple(v for v in self.variables if v.clock)

    @property
    def location_ids(self) -> tuple[str, ...]:
        return tuple(loc.id for loc in self.locations)

    def location(self, lid: str) -> Location:
        for loc in self.locations:
            if loc.id == lid:
                return loc
        raise KeyError(lid)

    def invariant(self, lid: str) -> ConstraintSet:
        return self.location(lid).invariant

    def outgoing(self, lid: str) -> list[Transition]:
        return [t for t in self.transitions if t.source == lid]

    def incoming(self, lid: str) -> list[Transition]:
        return [t for t in self.transitions if t.target == lid]

    def with_transitions(self, transitions: Iterable[Transition]) -> "TimedAutomaton":
        return replace(self, transitions=tuple(transitions))


@dataclass(frozen=True)
class Network:
    components: tuple[TimedAutomaton, ...]

    @property
    def variables(self) -> tuple[Var, ...]:
        return tuple(v for a in self.components for v in a.variables)

    def __len__(self) -> int:
        return len(self.components)


Model = Union[TimedAutomaton, Network]


def as_network(model: Model) -> Network:
    return model if isinstance(model, Network) else Network((model,))


@dataclass(frozen=True, order=True)
class ConcreteState:
    """A location vector plus a valuation (variable name -> value)."""

    locs: tuple[str, ...]
    values: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def make(cls, locs: Sequence[str], valuation: Mapping[str, object]) -> "ConcreteState":
        return cls(tuple(locs), tuple(sorted((k, Fraction(v)) for k, v in valuation.items())))

    @property
    def valuation(self) -> dict[str, Fraction]:
        return dict(self.values)

    def __str__(self) -> str:
        vals = ", ".join(f"{k}={v}" for k, v in self.values)
        return f"<({', '.join(self.locs)}), {{{vals}}}>"


@dataclass(frozen=True)
class Diagnostic:
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


def _check_constraint(where: str, cs: ConstraintSet, declared: Mapping[str, Var], out: list[Diagnostic]) -> None:
    for v in sorted(cs.vars):
        if v.name not in declared:
            out.append(Diagnostic(f"{where}: undeclared variable '{v.name}'"))
        elif declared[v.name] != v:
            out.append(Diagnostic(f"{where}: variable '{v.name}' used with the wrong kind"))


def _validate_automaton(a: TimedAutomaton) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    declared: dict[str, Var] = {}
    for d in a.vars:
        if d.kind not in ("clock", "int"):
            out.append(Diagnostic(f"variable '{d.name}' has unknown kind {d.kind!r}"))
        if d.name in declared:
            out.append(Diagnostic(f"duplicate variable '{d.name}'"))
        declared[d.name] = d.var
    ids: set[str] = set()
    for loc in a.locations:
        if loc.id in ids:
            out.append(Diagnostic(f"duplicate location '{loc.id}'"))
        ids.add(loc.id)
        _check_constraint(f"invariant of {loc.id}", loc.invariant, declared, out)
    if not a.locations:
        out.append(Diagnostic(f"automaton '{a.name}' has no locations"))
    if a.initial not in ids:
        out.append(Diagnostic(f"initial location '{a.initial}' is not declared"))
    for t in a.transitions:
        for end in (t.source, t.target):
            if end not in ids:
                out.append(Diagnostic(f"transition {t}: unknown location '{end}'"))
        _check_constraint(f"guard of {t.source} -> {t.target}", t.guard, declared, out)
        seen: set[str] = set()
        for v, value in t.resets:
            where = f"reset of {t.source} -> {t.target}"
            if v.name not in declared:
                out.append(Diagnostic(f"{where}: undeclared variable '{v.name}'"))
                continue
            if v.name in seen:
                out.append(Diagnostic(f"{where}: variable '{v.name}' reset more than once"))
            seen.add(v.name)
            for w in value.vars:
                if w.name not in declared:
                    out.append(Diagnostic(f"{where}: undeclared variable '{w.name}'"))
            if declared[v.name].clock:
                if value.coeffs:
                    out.append(Diagnostic(f"{where}: clock '{v.name}' must be reset to a constant"))
                elif value.constant < 0:
                    out.append(Diagnostic(f"{where}: negative clock reset of '{v.name}'"))
            elif any(w.clock for w in value.vars):
                out.append(Diagnostic(f"{where}: integer '{v.name}' assigned a clock expression"))
    return out


def validate(model: Model) -> list[Diagnostic]:
    """All violations of the model's well-formedness rules; empty iff well-formed."""
    if isinstance(model, TimedAutomaton):
        return _validate_automaton(model)
    out: list[Diagnostic] = []
    if not model.components:
        out.append(Diagnostic("network has no components"))
    owner: dict[str, str] = {}
    for a in model.components:
        out.extend(Diagnostic(f"{a.name}: {d.message}", d.severity) for d in _validate_automaton(a))
        for d in a.vars:
            if d.name in owner and owner[d.name] != a.name:
                out.append(Diagnostic(f"variable '{d.name}' is shared by {owner[d.name]} and {a.name}"))
            owner.setdefault(d.name, a.name)
    sends = {t.event.name for a in model.components for t in a.transitions
             if t.event is not None and t.event.polarity is Polarity.SEND}
    receives = {t.event.name for a in model.components for t in a.transitions
                if t.event is not None and t.event.polarity is Polarity.RECEIVE}
    for name in sorted(sends - receives):
        out.append(Diagnostic(f"channel '{name}' is sent but never received", "warning"))
    for name in sorted(receives - sends):
        out.append(Diagnostic(f"channel '{name}' is received but never sent", "warning"))
    return out


def _ordered_ids(a: TimedAutomaton) -> list[str]:
    return [a.initial] + [lid for lid in a.location_ids if lid != a.initial]


def product_locations(n: Network) -> list[tuple[str, ...]]:
    """Every location vector of the network; the initial vector comes first."""
    if not n.components:
        raise ValueError("empty network has no locations")
    return list(itertools.product(*(_ordered_ids(a) for a in n.components)))


def vector_id(vec: Sequence[str]) -> str:
    """Location id used for a location vector in a composed automaton."""
    if len(vec) == 1:
        return vec[0]
    return "(" + ",".join(vec) + ")"


def substitute_location(vec: Sequence[str], i: int, lid: str) -> tuple[str, ...]:
    out = list(vec)
    out[i] = lid
    return tuple(out)


def compose(n: Network, invariants: Optional[Mapping[tuple[str, ...], ConstraintSet]] = None) -> TimedAutomaton:
    """Explicit product of a network.

    Unsynchronized transitions interleave; a send and a matching receive in
    two different components fire together.  Send/receive transitions with
    no partner never appear in the product.  ``invariants`` optionally fills
    ``new_invariant`` of each product location.
    """
    if not n.components:
        raise ValueError("cannot compose an empty network")
    if len(n.components) == 1:
        return n.components[0]
    vectors = product_locations(n)
    locations = []
    for vec in vectors:
        inv = ConstraintSet(tuple(atom for a, lid in zip(n.components, vec) for atom in a.invariant(lid)))
        new = invariants.get(vec) if invariants is not None else None
        locations.append(Location(vector_id(vec), inv, new))
    transitions: list[Transition] = []
    for vec in vectors:
        for i, a in enumerate(n.components):
            for t in a.outgoing(vec[i]):
                if t.synchronizing:
                    continue
                transitions.append(replace(t, source=vector_id(vec), target=vector_id(substitute_location(vec, i, t.target))))
        for i, a in enumerate(n.components):
            for t in a.outgoing(vec[i]):
                if t.event is None or t.event.polarity is not Polarity.SEND:
                    continue
                for j, b in enumerate(n.components):
                    if j == i:
                        continue
                    for u in b.outgoing(vec[j]):
                        if u.event != Event(t.event.name, Polarity.RECEIVE):
                            continue
                        dst = substitute_location(substitute_location(vec, i, t.target), j, u.target)
                        transitions.append(Transition(
                            vector_id(vec), vector_id(dst), Event(t.event.name),
                            t.guard & u.guard, t.resets + u.resets,
                        ))
    return TimedAutomaton(
        "||".join(a.name for a in n.components),
        tuple(locations),
        vector_id(vectors[0]),
        tuple(d for a in n.components for d in a.vars),
        tuple(transitions),
    )
