"""Parser and pretty-printer for the ``.ta`` automaton language.

Example::

    automaton A {
      clock x, y;
      init l0;
      location l0 inv y <= 1;
      location l1;
      l0 -> l0 do x := 0;
      l0 -> l1 on !go when x >= 1;
    }

Line comments start with ``//``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

from .constraints import Atom, ConstraintSet, LinearTerm, Var
from .model import (
    Event,
    Location,
    Network,
    Polarity,
    TimedAutomaton,
    Transition,
    VariableDecl,
    validate,
)

__all__ = [
    "SourceSpan", "ParseDiagnostic", "ParseError", "parse", "check", "parse_constraints",
    "format_network", "format_automaton",
]

KEYWORDS = {"automaton", "clock", "int", "init", "location", "inv", "on", "when", "do"}
RELATIONS = ("<=", ">=", "==", "<", ">")


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.span}: {self.severity}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass(frozen=True)
class _Tok:
    kind: str  # "id", "int", "sym", "eof"
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<int>\d+)"
    r"|(?P<sym>->|:=|<=|>=|==|&&|[{};,<>+\-*!?])"
)


def _tokenize(src: str, file: str) -> Iterator[_Tok]:
    line, line_start, pos = 1, 0, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError([ParseDiagnostic(SourceSpan(file, line, pos - line_start + 1),
                                              f"unexpected character {src[pos]!r}")])
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind in ("id", "int", "sym"):
            yield _Tok(kind, m.group(), line, pos - line_start + 1)
        pos = m.end()
    yield _Tok("eof", "", line, pos - line_start + 1)


class _Parser:
    def __init__(self, src: str, file: str):
        self.file = file
        self.toks = list(_tokenize(src, file))
        self.i = 0
        self.diags: list[ParseDiagnostic] = []
        self.scope: dict[str, Var] = {}

    # -- token helpers --
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def span(self, tok: Optional[_Tok] = None) -> SourceSpan:
        tok = tok or self.tok
        return SourceSpan(self.file, tok.line, tok.col)

    def fail(self, message: str, tok: Optional[_Tok] = None):
        raise ParseError(self.diags + [ParseDiagnostic(self.span(tok), message)])

    def at(self, text: str) -> bool:
        return self.tok.kind in ("sym", "id") and self.tok.text == text

    def accept(self, text: str) -> Optional[_Tok]:
        if self.at(text):
            tok = self.tok
            self.i += 1
            return tok
        return None

    def expect(self, text: str) -> _Tok:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of input"
            self.fail(f"expected '{text}', found '{found}'")
        return tok

    def ident(self, what: str = "identifier") -> _Tok:
        tok = self.tok
        if tok.kind != "id" or tok.text in KEYWORDS:
            self.fail(f"expected {what}, found '{tok.text or 'end of input'}'")
        self.i += 1
        return tok

    def error(self, tok: _Tok, message: str, severity: str = "error") -> None:
        self.diags.append(ParseDiagnostic(self.span(tok), message, severity))

    # -- grammar --
    def network(self) -> Network:
        if not self.at("automaton"):
            self.fail("expected 'automaton'")
        components = []
        owners: dict[str, str] = {}
        while self.at("automaton"):
            components.append(self.automaton(owners))
        if self.tok.kind != "eof":
            self.fail(f"expected 'automaton', found '{self.tok.text}'")
        return Network(tuple(components))

    def automaton(self, owners: dict[str, str]) -> TimedAutomaton:
        self.expect("automaton")
        name = self.ident("automaton name").text
        self.expect("{")
        decls: list[VariableDecl] = []
        self.scope = {}
        for kind in ("clock", "int"):
            if self.accept(kind):
                while True:
                    tok = self.ident("variable name")
                    if tok.text in self.scope:
                        self.error(tok, f"duplicate variable '{tok.text}'")
                    elif tok.text in owners:
                        self.error(tok, f"variable '{tok.text}' is already declared by automaton {owners[tok.text]}")
                    owners.setdefault(tok.text, name)
                    decl = VariableDecl(tok.text, kind)
                    self.scope[tok.text] = decl.var
                    decls.append(decl)
                    if not self.accept(","):
                        break
                self.expect(";")
        self.expect("init")
        init_tok = self.ident("initial location")
        self.expect(";")
        locations: list[Location] = []
        loc_toks: dict[str, _Tok] = {}
        if not self.at("location"):
            self.fail("expected 'location'")
        while self.accept("location"):
            tok = self.ident("location name")
            inv = self.conjunction() if self.accept("inv") else ConstraintSet()
            self.expect(";")
            if tok.text in loc_toks:
                self.error(tok, f"duplicate location '{tok.text}'")
                continue
            loc_toks[tok.text] = tok
            locations.append(Location(tok.text, inv))
        if init_tok.text not in loc_toks:
            self.error(init_tok, f"initial location '{init_tok.text}' is not declared")
        transitions = []
        while not self.at("}"):
            transitions.append(self.transition(loc_toks))
        self.expect("}")
        a = TimedAutomaton(name, tuple(locations), init_tok.text, tuple(decls), tuple(transitions))
        return a

    def transition(self, loc_toks: dict[str, _Tok]) -> Transition:
        src = self.ident("source location")
        self.expect("->")
        dst = self.ident("target location")
        for tok in (src, dst):
            if tok.text not in loc_toks:
                self.error(tok, f"unknown location '{tok.text}'")
        event = None
        if self.accept("on"):
            pol = Polarity.INTERNAL
            if self.accept("!"):
                pol = Polarity.SEND
            elif self.accept("?"):
                pol = Polarity.RECEIVE
            event = Event(self.ident("event name").text, pol)
        guard = self.conjunction() if self.accept("when") else ConstraintSet()
        resets: list[tuple[Var, LinearTerm]] = []
        if self.accept("do"):
            assigned: set[str] = set()
            while True:
                tok = self.ident("variable name")
                self.expect(":=")
                value_tok = self.tok
                value, clocks = self.linexp()
                var = self.lookup(tok)
                if var is not None:
                    if tok.text in assigned:
                        self.error(tok, f"variable '{tok.text}' reset more than once")
                    assigned.add(tok.text)
                    if var.clock and (value.coeffs or clocks):
                        self.error(value_tok, f"clock '{tok.text}' must be reset to a constant")
                    elif var.clock and value.constant < 0:
                        self.error(value_tok, f"negative clock reset of '{tok.text}'")
                    elif not var.clock and clocks:
                        self.error(value_tok, f"integer '{tok.text}' assigned a clock expression")
                    resets.append((var, value))
                if not self.accept(","):
                    break
        self.expect(";")
        return Transition(src.text, dst.text, event, guard, tuple(resets))

    def conjunction(self) -> ConstraintSet:
        atoms = [self.constraint()]
        while self.accept("&&"):
            atoms.append(self.constraint())
        return ConstraintSet(tuple(atoms))

    def constraint(self) -> Atom:
        start = self.tok
        lhs, lclocks = self.linexp()
        rel_tok = self.tok
        if rel_tok.kind != "sym" or rel_tok.text not in RELATIONS:
            self.fail(f"expected a relation (<=, <, ==, >, >=), found '{rel_tok.text or 'end of input'}'")
        self.i += 1
        rhs, rclocks = self.linexp()
        for side, clocks in ((lhs, lclocks), (rhs, rclocks)):
            if clocks and (len(side.coeffs) != 1 or side.constant or side.coeffs[0][1] != 1):
                self.error(start, "a clock must stand alone on its side of a constraint")
        atom = Atom.make(lhs, rel_tok.text, rhs)
        if atom.is_constant:
            self.error(start, "constraint mentions no variable")
        return atom

    def linexp(self) -> tuple[LinearTerm, bool]:
        """A linear expression and whether it mentions a clock."""
        term, clocks = self.signed_primary()
        while self.tok.kind == "sym" and self.tok.text in ("+", "-"):
            neg = self.tok.text == "-"
            self.i += 1
            t, c = self.signed_primary()
            term = term - t if neg else term + t
            clocks = clocks or c
        return term, clocks

    def signed_primary(self) -> tuple[LinearTerm, bool]:
        if self.accept("-"):
            t, c = self.primary()
            return -t, c
        return self.primary()

    def primary(self) -> tuple[LinearTerm, bool]:
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            k = int(tok.text)
            if self.accept("*"):
                var_tok = self.ident("variable name")
                var = self.lookup(var_tok)
                if var is None:
                    return LinearTerm.const(0), False
                return LinearTerm.var(var, k), var.clock
            return LinearTerm.const(k), False
        if tok.kind == "id" and tok.text not in KEYWORDS:
            self.i += 1
            var = self.lookup(tok)
            if var is None:
                return LinearTerm.const(0), False
            return LinearTerm.var(var), var.clock
        self.fail(f"expected an expression, found '{tok.text or 'end of input'}'")

    def lookup(self, tok: _Tok) -> Optional[Var]:
        var = self.scope.get(tok.text)
        if var is None:
            self.error(tok, f"undeclared variable '{tok.text}'")
        return var


def check(source: str, file: str = "<input>") -> tuple[Optional[Network], list[ParseDiagnostic]]:
    """Parse ``source``; returns the network (None on errors) and all diagnostics."""
    try:
        p = _Parser(source, file)
        net = p.network()
    except ParseError as exc:
        return None, exc.diagnostics
    diags = list(p.diags)
    first = SourceSpan(file, 1, 1)
    if not any(d.severity == "error" for d in diags):
        for d in validate(net):
            diags.append(ParseDiagnostic(first, d.message, d.severity))
    if any(d.severity == "error" for d in diags):
        return None, diags
    return net, diags


def parse(source: str, file: str = "<input>") -> Network:
    """Parse and validate ``source``; raises :class:`ParseError` on errors."""
    net, diags = check(source, file)
    if net is None:
        raise ParseError([d for d in diags if d.severity == "error"])
    return net


def parse_constraints(text: str, clocks: Iterable[str] = (), ints: Iterable[str] = ()) -> ConstraintSet:
    """Parse a conjunction such as ``"x <= y && n == 1"`` over the given variables."""
    p = _Parser(text, "<constraint>")
    p.scope = {name: Var(name, True) for name in clocks}
    p.scope.update({name: Var(name) for name in ints})
    cs = p.conjunction()
    if p.tok.kind != "eof":
        p.fail(f"unexpected '{p.tok.text}' after constraint")
    if p.diags:
        raise ParseError(p.diags)
    return cs


def _conj(cs: ConstraintSet) -> str:
    return " && ".join(str(a) for a in cs)


def format_automaton(a: TimedAutomaton, annotate: bool = True) -> str:
    """Render one automaton in the ``.ta`` syntax.

    With ``annotate`` the strengthened invariants (if any) are written as
    comments next to their locations.
    """
    lines = [f"automaton {a.name} {{"]
    clocks = [d.name for d in a.vars if d.kind == "clock"]
    ints = [d.name for d in a.vars if d.kind == "int"]
    if clocks:
        lines.append(f"  clock {', '.join(clocks)};")
    if ints:
        lines.append(f"  int {', '.join(ints)};")
    lines.append(f"  init {a.initial};")
    for loc in a.locations:
        line = f"  location {loc.id}"
        if loc.invariant:
            line += f" inv {_conj(loc.invariant)}"
        line += ";"
        if annotate and loc.new_invariant is not None and loc.new_invariant != loc.invariant:
            line += f"  // strengthened: {loc.new_invariant}"
        lines.append(line)
    for t in a.transitions:
        line = f"  {t.source} -> {t.target}"
        if t.event is not None:
            line += f" on {t.event}"
        if t.guard:
            line += f" when {_conj(t.guard)}"
        if t.resets:
            line += " do " + ", ".join(f"{v} := {val}" for v, val in t.resets)
        lines.append(line + ";")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_network(n: Network, annotate: bool = True) -> str:
    return "\n".join(format_automaton(a, annotate) for a in n.components)
