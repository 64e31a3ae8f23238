"""Random small timed automata for property tests."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .constraints import Atom, ConstraintSet, LinearTerm, Var
from .model import Location, TimedAutomaton, Transition, VariableDecl


@dataclass(frozen=True)
class FuzzConfig:
    max_locations: int = 4
    max_clocks: int = 2
    max_ints: int = 1
    max_constant: int = 4
    max_transitions: int = 6


def _clock_atom(rng: random.Random, clocks: list[Var], ints: list[Var], k: int) -> Atom:
    x = rng.choice(clocks)
    kind = rng.random()
    rel = rng.choice(["<=", "<", ">=", ">", "=="] if kind < 0.15 else ["<=", "<", ">=", ">"])
    if kind < 0.2 and len(clocks) > 1:
        y = next(c for c in clocks if c != x)
        return Atom.make(LinearTerm.var(x), rel, LinearTerm.var(y))
    if kind < 0.28 and ints:
        return Atom.make(LinearTerm.var(x), rel, LinearTerm.of({ints[0]: 1}, rng.randint(0, k)))
    return Atom.make(LinearTerm.var(x), rel, rng.randint(0, k))


def _int_atom(rng: random.Random, n: Var, k: int) -> Atom:
    return Atom.make(LinearTerm.var(n), rng.choice(["<=", "<", ">=", ">", "=="]), rng.randint(-1, k))


def _atom(rng: random.Random, clocks: list[Var], ints: list[Var], k: int) -> Atom:
    if ints and (not clocks or rng.random() < 0.3):
        return _int_atom(rng, ints[0], k)
    return _clock_atom(rng, clocks, ints, k)


def random_automaton(rng: random.Random, cfg: FuzzConfig = FuzzConfig(), name: str = "F") -> TimedAutomaton:
    k = cfg.max_constant
    clocks = [Var(f"x{i}", clock=True) for i in range(rng.randint(1, cfg.max_clocks))]
    ints = [Var(f"n{i}") for i in range(rng.randint(0, cfg.max_ints))]
    ids = [f"l{i}" for i in range(rng.randint(1, cfg.max_locations))]
    locations = []
    for lid in ids:
        atoms = []
        if rng.random() < 0.6:
            atoms.append(_atom(rng, clocks, ints, k))
        if rng.random() < 0.2:
            atoms.append(_atom(rng, clocks, ints, k))
        locations.append(Location(lid, ConstraintSet(tuple(atoms))))
    transitions = []
    for _ in range(rng.randint(1, cfg.max_transitions)):
        src, dst = rng.choice(ids), rng.choice(ids)
        guard = tuple(_atom(rng, clocks, ints, k) for _ in range(rng.choice([0, 1, 1, 2])))
        resets: list[tuple[Var, LinearTerm]] = []
        for x in clocks:
            if rng.random() < 0.35:
                resets.append((x, LinearTerm.const(rng.choice([0, 0, 0, 1]))))
        for n in ints:
            r = rng.random()
            if r < 0.2:
                resets.append((n, LinearTerm.const(rng.randint(0, k))))
            elif r < 0.35:
                resets.append((n, LinearTerm.of({n: 1}, 1)))
                guard += (Atom.make(LinearTerm.var(n), "<", k),)
        transitions.append(Transition(src, dst, None, ConstraintSet(guard), tuple(resets)))
    decls = tuple(VariableDecl(v.name, "clock") for v in clocks) + tuple(VariableDecl(v.name, "int") for v in ints)
    return TimedAutomaton(name, tuple(locations), ids[0], decls, tuple(transitions))


def corpus(size: int = 200, seed: int = 0, cfg: FuzzConfig = FuzzConfig()) -> list[TimedAutomaton]:
    rng = random.Random(seed)
    return [random_automaton(rng, cfg, f"F{i}") for i in range(size)]
