"""Conjunctive linear constraints over clocks and integer variables.

Atoms are kept in the normal form ``sum(c_i * v_i) + c rel 0`` with
``rel`` one of ``<=``, ``<`` or ``==``.  Satisfiability is decided over the
rationals by Fourier-Motzkin elimination (equalities are substituted away
first).  Clocks are implicitly non-negative everywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Iterator, Mapping, Optional, Sequence

__all__ = [
    "Var",
    "LinearTerm",
    "Atom",
    "ConstraintSet",
    "Cube",
    "FALSE_ATOM",
    "TRUE",
    "ResourceLimitError",
    "DEFAULT_LIMIT",
    "conjoin",
    "cube_to_constraints",
    "cube_cases",
    "satisfiable",
    "entails",
    "equivalent",
    "eliminate",
    "apply_reset",
    "reset_atoms",
    "delay_closure",
    "substitute",
    "shift",
    "reduce",
]

DEFAULT_LIMIT = 10**6

_FLIP = {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "==": "=="}


class ResourceLimitError(RuntimeError):
    """Raised when Fourier-Motzkin elimination exceeds its atom ceiling."""


@dataclass(frozen=True, order=True)
class Var:
    name: str
    clock: bool = False

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"{'clock' if self.clock else 'int'}:{self.name}"


@dataclass(frozen=True)
class LinearTerm:
    """``constant + sum(coeff * var)`` with integer coefficients.

    Zero coefficients are never stored and ``coeffs`` is sorted by variable,
    so structurally equal terms compare equal.
    """

    coeffs: tuple[tuple[Var, int], ...] = ()
    constant: int = 0

    @classmethod
    def of(cls, coeffs: Mapping[Var, int] | Iterable[tuple[Var, int]] = (), constant: int = 0) -> "LinearTerm":
        acc: dict[Var, int] = {}
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for v, c in items:
            acc[v] = acc.get(v, 0) + c
        return cls(tuple(sorted((v, c) for v, c in acc.items() if c)), constant)

    @classmethod
    def var(cls, v: Var, coeff: int = 1) -> "LinearTerm":
        return cls.of({v: coeff})

    @classmethod
    def const(cls, c: int) -> "LinearTerm":
        return cls((), c)

    @property
    def vars(self) -> frozenset[Var]:
        return frozenset(v for v, _ in self.coeffs)

    def coeff(self, v: Var) -> int:
        for w, c in self.coeffs:
            if w == v:
                return c
        return 0

    def as_dict(self) -> dict[Var, int]:
        return dict(self.coeffs)

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        return LinearTerm.of(self.coeffs + other.coeffs, self.constant + other.constant)

    def __neg__(self) -> "LinearTerm":
        return LinearTerm(tuple((v, -c) for v, c in self.coeffs), -self.constant)

    def __sub__(self, other: "LinearTerm") -> "LinearTerm":
        return self + (-other)

    def scale(self, k: int) -> "LinearTerm":
        if k == 0:
            return LinearTerm()
        return LinearTerm(tuple((v, c * k) for v, c in self.coeffs), self.constant * k)

    def substitute(self, mapping: Mapping[Var, "LinearTerm"]) -> "LinearTerm":
        out = LinearTerm.const(self.constant)
        for v, c in self.coeffs:
            out = out + (mapping[v].scale(c) if v in mapping else LinearTerm.var(v, c))
        return out

    def evaluate(self, valuation: Mapping[Var, object]):
        return self.constant + sum(c * valuation[v] for v, c in self.coeffs)

    def __str__(self) -> str:
        return _render_sum(list(self.coeffs), self.constant)


def _render_sum(coeffs: list[tuple[Var, int]], constant: int) -> str:
    parts: list[str] = []
    for v, c in coeffs:
        mag = abs(c)
        body = v.name if mag == 1 else f"{mag}*{v.name}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(("+ " if c > 0 else "- ") + body)
    if not parts:
        parts.append(str(constant))
    elif constant:
        parts.append(("+ " if constant > 0 else "- ") + str(abs(constant)))
    return " ".join(parts)


@dataclass(frozen=True)
class Atom:
    """A single linear constraint ``term rel 0``.

    Use :meth:`make` to build atoms from two sides and any of the five
    relations; the constructor itself expects an already normalized term.
    """

    term: LinearTerm
    rel: str  # one of "<=", "<", "=="

    @classmethod
    def make(cls, lhs: LinearTerm | Var | int, rel: str, rhs: LinearTerm | Var | int) -> "Atom":
        lhs, rhs = _as_term(lhs), _as_term(rhs)
        if rel in ("<=", "<", "=="):
            return cls.normal(lhs - rhs, rel)
        if rel == ">=":
            return cls.normal(rhs - lhs, "<=")
        if rel == ">":
            return cls.normal(rhs - lhs, "<")
        if rel == "=":
            return cls.normal(lhs - rhs, "==")
        raise ValueError(f"unknown relation {rel!r}")

    @classmethod
    def normal(cls, term: LinearTerm, rel: str) -> "Atom":
        if not term.coeffs:
            ok = {"<=": term.constant <= 0, "<": term.constant < 0, "==": term.constant == 0}[rel]
            return TRUE_ATOM if ok else FALSE_ATOM
        g = term.constant
        for _, c in term.coeffs:
            g = gcd(g, c)
        if rel == "==" and term.coeffs[0][1] < 0:
            g = -g
        if g != 1:
            term = LinearTerm(tuple((v, c // g) for v, c in term.coeffs), term.constant // g)
        return cls(term, rel)

    @property
    def vars(self) -> frozenset[Var]:
        return self.term.vars

    @property
    def is_constant(self) -> bool:
        return not self.term.coeffs

    @property
    def is_false(self) -> bool:
        return self == FALSE_ATOM

    def negate(self) -> list["Atom"]:
        """Atoms whose disjunction is the negation of this atom."""
        if self.rel == "<=":
            return [Atom.normal(-self.term, "<")]
        if self.rel == "<":
            return [Atom.normal(-self.term, "<=")]
        return [Atom.normal(self.term, "<"), Atom.normal(-self.term, "<")]

    def holds(self, valuation: Mapping[Var, object]) -> bool:
        value = self.term.evaluate(valuation)
        if self.rel == "<=":
            return value <= 0
        if self.rel == "<":
            return value < 0
        return value == 0

    def substitute(self, mapping: Mapping[Var, LinearTerm]) -> "Atom":
        return Atom.normal(self.term.substitute(mapping), self.rel)

    def __str__(self) -> str:
        if self.is_constant:
            return "true" if self == TRUE_ATOM else "0 < 0"
        k = self.term.constant
        clocks = [(v, c) for v, c in self.term.coeffs if v.clock]
        if len(clocks) == 1 and abs(clocks[0][1]) == 1 and len(self.term.coeffs) > 1:
            # keep a lone clock on its own side:  x <= n + 2  rather than  n >= x - 2
            x, c = clocks[0]
            rest = LinearTerm(tuple(p for p in self.term.coeffs if p[0] != x), k)
            rel = self.rel if c > 0 else _FLIP[self.rel]
            return f"{x} {rel} {-rest if c > 0 else rest}"
        pos = [(v, c) for v, c in self.term.coeffs if c > 0]
        neg = [(v, -c) for v, c in self.term.coeffs if c < 0]
        if not pos:
            # -N + k rel 0  <=>  N flip(rel) k
            return f"{_render_sum(neg, 0)} {_FLIP[self.rel]} {k}"
        if not neg:
            return f"{_render_sum(pos, 0)} {self.rel} {-k}"
        return f"{_render_sum(pos, 0)} {self.rel} {_render_sum(neg, -k)}"

    def __repr__(self) -> str:
        return f"Atom({self})"


TRUE_ATOM = Atom(LinearTerm(), "<=")
FALSE_ATOM = Atom(LinearTerm(), "<")


def _as_term(x: LinearTerm | Var | int) -> LinearTerm:
    if isinstance(x, LinearTerm):
        return x
    if isinstance(x, Var):
        return LinearTerm.var(x)
    return LinearTerm.const(int(x))


@dataclass(frozen=True)
class ConstraintSet:
    """A conjunction of atoms.  Order is kept for display; equality is by set."""

    atoms: tuple[Atom, ...] = ()
    _key: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        seen: dict[Atom, None] = {}
        for a in self.atoms:
            if a != TRUE_ATOM:
                seen.setdefault(a, None)
        object.__setattr__(self, "atoms", tuple(seen))
        object.__setattr__(self, "_key", frozenset(seen))

    @classmethod
    def of(cls, *atoms: Atom) -> "ConstraintSet":
        return cls(tuple(atoms))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConstraintSet):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: object) -> bool:
        return atom in self._key

    def __and__(self, other: "ConstraintSet") -> "ConstraintSet":
        return conjoin(self, other)

    @property
    def vars(self) -> frozenset[Var]:
        out: set[Var] = set()
        for a in self.atoms:
            out |= a.vars
        return frozenset(out)

    def substitute(self, mapping: Mapping[Var, LinearTerm]) -> "ConstraintSet":
        return ConstraintSet(tuple(a.substitute(mapping) for a in self.atoms))

    def holds(self, valuation: Mapping[Var, object]) -> bool:
        return all(a.holds(valuation) for a in self.atoms)

    def __str__(self) -> str:
        if not self.atoms:
            return "true"
        return " && ".join(str(a) for a in self.atoms)

    def __repr__(self) -> str:
        return "{" + ", ".join(str(a) for a in self.atoms) + "}"


TRUE = ConstraintSet()


@dataclass(frozen=True)
class Cube:
    """A signed conjunction over an ordered predicate set (a minterm)."""

    literals: tuple[tuple[Atom, bool], ...] = ()

    @property
    def predicates(self) -> tuple[Atom, ...]:
        return tuple(p for p, _ in self.literals)

    def sign(self, predicate: Atom) -> bool:
        for p, s in self.literals:
            if p == predicate:
                return s
        raise KeyError(predicate)

    def holds(self, valuation: Mapping[Var, object]) -> bool:
        return all(p.holds(valuation) == s for p, s in self.literals)

    def flipped(self) -> "Cube":
        return Cube(tuple((p, not s) for p, s in self.literals))

    def __len__(self) -> int:
        return len(self.literals)


def conjoin(a: ConstraintSet, b: ConstraintSet) -> ConstraintSet:
    return ConstraintSet(a.atoms + b.atoms)


def cube_to_constraints(q: Cube) -> ConstraintSet:
    """The conjunction a cube denotes.

    A negated equality is a disjunction and has no single-atom form; use
    :func:`cube_cases` for cubes that may contain one.
    """
    out: list[Atom] = []
    for p, positive in q.literals:
        if positive:
            out.append(p)
            continue
        neg = p.negate()
        if len(neg) != 1:
            raise ValueError(f"negation of {p} is not an atom; use cube_cases()")
        out.append(neg[0])
    return ConstraintSet(tuple(out))


def cube_cases(q: Cube, base: ConstraintSet = TRUE) -> list[ConstraintSet]:
    """Conjunctions whose disjunction is ``base and q``."""
    cases: list[tuple[Atom, ...]] = [base.atoms]
    for p, positive in q.literals:
        options = [p] if positive else p.negate()
        cases = [c + (o,) for c in cases for o in options]
    return [ConstraintSet(c) for c in cases]


# -- decision procedure ------------------------------------------------------

# A row (coeffs, constant, strict) means  sum(coeffs) + constant (<|<=) 0.


def _norm_row(coeffs: dict[Var, int], const: int, strict: bool):
    items = tuple(sorted((v, c) for v, c in coeffs.items() if c))
    g = const
    for _, c in items:
        g = gcd(g, c)
    if g > 1:
        items = tuple((v, c // g) for v, c in items)
        const //= g
    return items, const, strict


def _split(atoms: Iterable[Atom]):
    eq_coeffs: list[dict[Var, int]] = []
    eq_consts: list[int] = []
    rows = []
    for a in atoms:
        if a.rel == "==":
            eq_coeffs.append(a.term.as_dict())
            eq_consts.append(a.term.constant)
        else:
            rows.append((a.term.as_dict(), a.term.constant, a.rel == "<"))
    return eq_coeffs, eq_consts, rows


def _nonneg_rows(vs: Iterable[Var]):
    return [({v: -1}, 0, False) for v in sorted(vs) if v.clock]


def _subst_row(coeffs: dict[Var, int], const: int, v: Var, eq: dict[Var, int], eq_const: int) -> tuple[dict[Var, int], int]:
    """Eliminate v from ``coeffs + const`` using ``eq + eq_const == 0``."""
    b = coeffs.get(v, 0)
    if not b:
        return coeffs, const
    a = eq[v]
    m, s = abs(a), (1 if a > 0 else -1)
    out = {w: c * m for w, c in coeffs.items()}
    for w, c in eq.items():
        out[w] = out.get(w, 0) - s * b * c
    out.pop(v, None)
    return {w: c for w, c in out.items() if c}, const * m - s * b * eq_const


def _gauss(eq_coeffs, eq_consts, rows):
    """Substitute all equalities away; returns (rows, consistent)."""
    eqs = list(zip(eq_coeffs, eq_consts))
    while eqs:
        e, k = eqs.pop(0)
        if not e:
            if k != 0:
                return rows, False
            continue
        v = min(e)
        eqs = [_subst_row(c, kk, v, e, k) for c, kk in eqs]
        rows = [(*_subst_row(c, kk, v, e, k), s) for c, kk, s in rows]
        if v.clock:
            # v >= 0 becomes a constraint on the remaining variables
            rows.append((*_subst_row({v: -1}, 0, v, e, k), False))
    return rows, True


def _tighten(rows) -> Optional[dict]:
    """Deduplicate rows by coefficient vector keeping the tightest bound.

    Returns None if a constant row is violated.
    """
    best: dict[tuple, tuple[int, bool]] = {}
    for c, k, s in rows:
        items, k, s = _norm_row(c, k, s)
        if not items:
            if k > 0 or (k == 0 and s):
                return None
            continue
        cur = best.get(items)
        if cur is None or k > cur[0] or (k == cur[0] and s and not cur[1]):
            best[items] = (k, s)
    return best


def _fm_step(best: dict, v: Var, limit: int) -> Optional[dict]:
    lowers, uppers, rest = [], [], []
    for items, (k, s) in best.items():
        d = dict(items)
        c = d.get(v, 0)
        if c > 0:
            uppers.append((d, k, s))
        elif c < 0:
            lowers.append((d, k, s))
        else:
            rest.append((d, k, s))
    size = len(rest) + len(lowers) * len(uppers)
    if size > limit:
        raise ResourceLimitError(f"eliminating {v} would produce {size} atoms (limit {limit})")
    combined = list(rest)
    for lo, kl, sl in lowers:
        a = -lo[v]
        for up, ku, su in uppers:
            b = up[v]
            out = {w: c * a for w, c in up.items()}
            for w, c in lo.items():
                out[w] = out.get(w, 0) + c * b
            out.pop(v, None)
            combined.append((out, ku * a + kl * b, sl or su))
    return _tighten(combined)


def _pick(best: dict) -> Optional[Var]:
    score: dict[Var, list[int]] = {}
    for items in best:
        for v, c in items:
            score.setdefault(v, [0, 0])[0 if c < 0 else 1] += 1
    if not score:
        return None
    return min(sorted(score), key=lambda v: score[v][0] * score[v][1] - score[v][0] - score[v][1])


def satisfiable(s: ConstraintSet | Iterable[Atom], limit: int = DEFAULT_LIMIT) -> bool:
    """Rational satisfiability with clocks ranging over the non-negatives."""
    atoms = list(s)
    if any(a.is_false for a in atoms):
        return False
    vs: set[Var] = set()
    for a in atoms:
        vs |= a.vars
    eq_c, eq_k, rows = _split(atoms)
    rows, ok = _gauss(eq_c, eq_k, rows + _nonneg_rows(vs))
    if not ok:
        return False
    best = _tighten(rows)
    while best is not None:
        v = _pick(best)
        if v is None:
            return True
        best = _fm_step(best, v, limit)
    return False


def entails(a: ConstraintSet, b: ConstraintSet, limit: int = DEFAULT_LIMIT) -> bool:
    for beta in b:
        for neg in beta.negate():
            if satisfiable(a.atoms + (neg,), limit):
                return False
    return True


def equivalent(a: ConstraintSet, b: ConstraintSet, limit: int = DEFAULT_LIMIT) -> bool:
    return entails(a, b, limit) and entails(b, a, limit)


def _row_atom(coeffs: dict[Var, int], const: int, rel: str) -> Atom:
    atom = Atom.normal(LinearTerm.of(coeffs, const), rel)
    return TRUE_ATOM if _implied_by_nonneg(atom) else atom


def _implied_by_nonneg(a: Atom) -> bool:
    # e.g. y >= 0 or x + y >= -2 when x, y are clocks
    if a.rel == "==" or a.is_constant:
        return False
    if not all(v.clock and c < 0 for v, c in a.term.coeffs):
        return False
    return a.term.constant < 0 or (a.term.constant == 0 and a.rel == "<=")


def eliminate(s: ConstraintSet, v: Var, limit: int = DEFAULT_LIMIT) -> ConstraintSet:
    """Existential projection of ``v`` out of ``s`` (exact over the rationals)."""
    if v not in s.vars:
        return s
    untouched = [a for a in s if v not in a.vars]
    eq_c, eq_k, rows = _split(a for a in s if v in a.vars)
    rows += _nonneg_rows([v])
    with_v = [i for i, c in enumerate(eq_c) if v in c]
    if with_v:
        i = with_v[0]
        e, k = eq_c[i], eq_k[i]
        out = list(untouched)
        for j, (c, kk) in enumerate(zip(eq_c, eq_k)):
            if j != i:
                out.append(_row_atom(*_subst_row(c, kk, v, e, k), "=="))
        for c, kk, strict in rows:
            out.append(_row_atom(*_subst_row(c, kk, v, e, k), "<" if strict else "<="))
        return ConstraintSet(tuple(out))
    best = _tighten(rows)
    if best is not None:
        best = _fm_step(best, v, limit)
    if best is None:
        return ConstraintSet(tuple(untouched) + (FALSE_ATOM,))
    out = list(untouched)
    for items, (k, strict) in best.items():
        out.append(_row_atom(dict(items), k, "<" if strict else "<="))
    return ConstraintSet(tuple(out))


def pre_var(v: Var) -> Var:
    """The pre-state copy of a reset variable."""
    return Var(v.name + "@pre", v.clock)


def reset_atoms(resets: Sequence[tuple[Var, LinearTerm]]) -> ConstraintSet:
    """Equalities ``v == value`` induced by a reset list.

    Values are read in the pre-state: a reset variable mentioned on a
    right-hand side is renamed with :func:`pre_var`.
    """
    ren = {v: LinearTerm.var(pre_var(v)) for v, _ in resets}
    return ConstraintSet(
        tuple(Atom.make(LinearTerm.var(v), "==", t.substitute(ren)) for v, t in resets)
    )


def apply_reset(s: ConstraintSet, resets: Sequence[tuple[Var, LinearTerm]], limit: int = DEFAULT_LIMIT) -> ConstraintSet:
    """Post-image of ``s`` under a simultaneous assignment."""
    if not resets:
        return s
    targets = sorted({v for v, _ in resets})
    ren = {v: LinearTerm.var(pre_var(v)) for v in targets}
    out = s.substitute(ren) & reset_atoms(resets)
    for v in targets:
        out = eliminate(out, pre_var(v), limit)
    return out


def delay_closure(s: ConstraintSet, clocks: Optional[Iterable[Var]] = None) -> ConstraintSet:
    """Keep exactly the atoms that stay true when all clocks advance.

    An atom ``e rel 0`` is stable iff the clock coefficients of ``e`` sum
    to at most zero (exactly zero for equalities).
    """
    is_clock = (lambda v: v.clock) if clocks is None else frozenset(clocks).__contains__
    kept = []
    for a in s:
        drift = sum(c for v, c in a.term.coeffs if is_clock(v))
        if drift == 0 or (drift < 0 and a.rel != "=="):
            kept.append(a)
    return ConstraintSet(tuple(kept))


def substitute(s: ConstraintSet, mapping: Mapping[Var, LinearTerm]) -> ConstraintSet:
    return s.substitute(mapping)


def shift(s: ConstraintSet, d: Var) -> ConstraintSet:
    """Replace every clock ``x`` by ``x + d``."""
    mapping = {v: LinearTerm.of({v: 1, d: 1}) for v in s.vars if v.clock and v != d}
    return s.substitute(mapping)


def reduce(s: ConstraintSet, protected: int = 0, limit: int = DEFAULT_LIMIT) -> ConstraintSet:
    """Drop atoms implied by the others, scanning from the back.

    The first ``protected`` atoms are never dropped.
    """
    atoms = list(s.atoms)
    i = len(atoms) - 1
    while i >= protected:
        rest = ConstraintSet(tuple(atoms[:i] + atoms[i + 1:]))
        if entails(rest, ConstraintSet((atoms[i],)), limit):
            del atoms[i]
        i -= 1
    return ConstraintSet(tuple(atoms))
