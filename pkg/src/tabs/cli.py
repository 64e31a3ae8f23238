"""Command-line interface: ``tabs cipm|abstract|validate|stats``.

Exit codes: 0 success, 1 diagnostics or failed checks, 2 internal error or
unreadable input, 3 inconclusive validation.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence

from .abstraction import build_abstraction
from .checks import INCONCLUSIVE, validate_model
from .cipm import cipm_network
from .dsl import ParseDiagnostic, check, format_network
from .emit import abstraction_report, cipm_report, emit_dot, emit_json
from .model import Network
from .oracle import OracleConfig

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_INTERNAL, EXIT_INCONCLUSIVE = 0, 1, 2, 3

_COLORS = {"error": "\033[31m", "warning": "\033[33m"}


class _InputError(Exception):
    pass


class _DiagnosticsFound(Exception):
    pass


@dataclass
class RunReport:
    """Phases in execution order with their wall time; skipped phases are marked."""

    PHASES = ("parse", "cipm", "oracle", "abstraction")

    input: str
    phases: list[tuple[str, str, float]] = field(default_factory=list)

    def run(self, name: str, fn: Callable):
        start = time.perf_counter()
        out = fn()
        self.phases.append((name, "done", time.perf_counter() - start))
        return out

    def skip(self, name: str) -> None:
        self.phases.append((name, "skipped", 0.0))

    def complete(self) -> None:
        done = {n for n, _, _ in self.phases}
        for name in self.PHASES:
            if name not in done:
                self.skip(name)

    def render(self) -> str:
        self.complete()
        return "\n".join(f"  {n:<12} {s:<8} {t * 1000:8.1f} ms" for n, s, t in self.phases)


def _use_color(stream) -> bool:
    mode = os.environ.get("TABS_COLOR", "auto").lower()
    if mode == "always":
        return True
    if mode == "never":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _print_diag(d: ParseDiagnostic) -> None:
    text = str(d)
    if _use_color(sys.stderr):
        color = _COLORS.get(d.severity, "")
        text = text.replace(f"{d.severity}:", f"{color}{d.severity}\033[0m:", 1)
    print(text, file=sys.stderr)


def _load(path: str) -> Network:
    try:
        source = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise _InputError(f"cannot read {path}: {exc.strerror if isinstance(exc, OSError) else exc}") from exc
    net, diags = check(source, path)
    for d in diags:
        _print_diag(d)
    if net is None:
        raise _DiagnosticsFound()
    return net


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        return
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_cipm(args: argparse.Namespace) -> int:
    rep = RunReport(args.input)
    net = rep.run("parse", lambda: _load(args.input))
    r = rep.run("cipm", lambda: cipm_network(net))
    pruned = format_network(Network(tuple(c.annotated for c in r.components)))
    if args.out:
        _write(args.out, pruned)
    elif "-" not in (args.json, args.dot):
        sys.stdout.write(pruned)
    _write(args.json, emit_json(cipm_report(r)))
    _write(args.dot, emit_dot(Network(tuple(c.annotated for c in r.components))))
    for w in r.composed.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _timings(args, rep)
    return EXIT_OK


def cmd_abstract(args: argparse.Namespace) -> int:
    rep = RunReport(args.input)
    net = rep.run("parse", lambda: _load(args.input))
    r = rep.run("cipm", lambda: cipm_network(net))
    abst = rep.run("abstraction", lambda: build_abstraction(r))
    report = abstraction_report(abst, compare_naive=args.compare_naive)
    _write(args.json, emit_json(report))
    _write(args.dot, emit_dot(abst))
    s = abst.stats
    rows = [("abstract states", s.abstract_states), ("reachable", s.reachable),
            ("transitions", s.abstract_transitions)]
    if args.compare_naive:
        rows += [("naive paired", s.naive_paired), ("naive unfiltered", s.naive_unfiltered)]
    out = sys.stderr if "-" in (args.json, args.dot) else sys.stdout
    for name, value in rows:
        print(f"{name + ':':<18}{value}", file=out)
    _timings(args, rep)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    rep = RunReport(args.input)
    net = rep.run("parse", lambda: _load(args.input))
    cfg = OracleConfig(
        time_granularity=Fraction(args.granularity),
        clock_ceiling=Fraction(args.ceiling) if args.ceiling is not None else None,
        step_bound=args.steps,
    )
    v = validate_model(net, cfg, rep.run)
    print(f"{'check':<12} {'verdict':<12} detail")
    for c in v.checks:
        print(c)
    if args.json:
        _write(args.json, emit_json({c.name: {"status": c.status, "detail": c.detail} for c in v.checks}))
    _timings(args, rep)
    if v.failed:
        return EXIT_DIAGNOSTICS
    if any(c.status == INCONCLUSIVE for c in v.checks):
        print("inconclusive: the oracle was truncated or saturated", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    rep = RunReport(args.input)
    net = rep.run("parse", lambda: _load(args.input))
    r = rep.run("cipm", lambda: cipm_network(net))
    abst = rep.run("abstraction", lambda: build_abstraction(r))
    a = r.composed.pruned
    report = {
        "components": len(net.components),
        "locations": len(a.locations),
        "transitions": len(r.composed.original.transitions),
        "pruned_transitions": len(r.removed),
        "unreachable_locations": len(r.composed.unreachable),
        "predicates": len(abst.pool.all),
    }
    report.update(abst.stats.as_dict())
    for k in sorted(report):
        print(f"{k:<22} {report[k]}")
    _write(args.json, emit_json(report))
    _timings(args, rep)
    return EXIT_OK


def _timings(args: argparse.Namespace, rep: RunReport) -> None:
    if getattr(args, "timings", False):
        print(f"timings for {rep.input}:\n{rep.render()}", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tabs", description="Invariant strengthening and predicate abstraction for timed automata.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("input", help="model file (.ta)")
        sp.add_argument("--json", metavar="PATH", help="write a JSON report ('-' for stdout)")
        sp.add_argument("--timings", action="store_true", help="print per-phase wall times to stderr")

    sp = sub.add_parser("cipm", help="strengthen invariants and prune idle transitions")
    common(sp)
    sp.add_argument("--out", metavar="PATH", help="write the pruned model here instead of stdout")
    sp.add_argument("--dot", metavar="PATH", help="write the pruned model as DOT")
    sp.set_defaults(func=cmd_cipm)

    sp = sub.add_parser("abstract", help="build the predicate abstraction")
    common(sp)
    sp.add_argument("--dot", metavar="PATH", help="write the abstraction as DOT")
    sp.add_argument("--compare-naive", action="store_true", help="also report the naive state counts")
    sp.set_defaults(func=cmd_abstract)

    sp = sub.add_parser("validate", help="cross-check against the grid oracle")
    common(sp)
    sp.add_argument("--granularity", default="1/2", help="time step of the oracle (1/m, default 1/2)")
    sp.add_argument("--ceiling", default=None, help="clock ceiling (default: 2 * max constant + 1)")
    sp.add_argument("--steps", type=int, default=10**5, help="maximum number of oracle states")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("stats", help="summary counts")
    common(sp)
    sp.set_defaults(func=cmd_stats)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except _DiagnosticsFound:
        return EXIT_DIAGNOSTICS
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last resort
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
