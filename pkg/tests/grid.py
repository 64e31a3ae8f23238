"""Brute-force reference evaluation of constraint sets on a rational grid.

Deliberately independent of the solver: atoms are evaluated with numpy on
every grid point.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from tabs.constraints import Atom, ConstraintSet, LinearTerm, Var

# k/2 for -8 <= k <= 16, stored doubled as integers
GRID = np.arange(-8, 17)


def grid_points(variables: list[Var]) -> dict[Var, np.ndarray]:
    """Doubled coordinates of every grid point; clocks only take non-negative values."""
    axes = [GRID[GRID >= 0] if v.clock else GRID for v in variables]
    mesh = np.meshgrid(*axes, indexing="ij") if axes else []
    return {v: m.ravel() for v, m in zip(variables, mesh)}


def atom_mask(atom: Atom, points: dict[Var, np.ndarray], size: int) -> np.ndarray:
    total = np.full(size, 2 * atom.term.constant, dtype=np.int64)
    for v, c in atom.term.coeffs:
        total = total + c * points[v]
    if atom.rel == "<=":
        return total <= 0
    if atom.rel == "<":
        return total < 0
    return total == 0


def models(s: ConstraintSet, variables: list[Var]) -> tuple[dict[Var, np.ndarray], np.ndarray]:
    points = grid_points(variables)
    size = len(next(iter(points.values()))) if points else 1
    mask = np.ones(size, dtype=bool)
    for a in s:
        mask &= atom_mask(a, points, size)
    return points, mask


def grid_witness(s: ConstraintSet, variables: list[Var]) -> bool:
    return bool(models(s, variables)[1].any())


def sample_valuations(variables: list[Var], step: int = 1):
    """Grid valuations as Fraction-free half-integers (floats are exact here)."""
    axes = [[k / 2 for k in GRID[::step] if not (v.clock and k < 0)] for v in variables]
    for combo in itertools.product(*axes):
        yield dict(zip(variables, combo))


# -- random constraint sets ------------------------------------------------

def random_set(rng: random.Random, variables: list[Var]) -> ConstraintSet:
    atoms = []
    for _ in range(rng.randint(1, 4)):
        used = rng.sample(variables, rng.randint(1, len(variables)))
        coeffs = {v: rng.choice([-2, -1, 1, 2]) for v in used}
        atoms.append(Atom.normal(LinearTerm.of(coeffs, rng.randint(-4, 4)), rng.choice(["<=", "<", "=="])))
    return ConstraintSet(tuple(atoms))


def random_vars(rng: random.Random) -> list[Var]:
    names = ["a", "b", "c"][: rng.randint(1, 3)]
    return [Var(n, rng.random() < 0.5) for n in names]
