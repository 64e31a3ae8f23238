"""Cross-checks of CIPM and the abstraction against the grid oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .abstraction import AbstractAutomaton, build_abstraction, simulate_check
from .cipm import NetworkCipmResult, cipm_network, iteration_bound
from .constraints import Atom
from .model import Model, Network, TimedAutomaton
from .oracle import OracleConfig, OracleResult, explore

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.name:<12} {self.status:<12} {self.detail}"


@dataclass
class Validation:
    """Everything computed while validating one model."""

    model: Model
    cipm: NetworkCipmResult
    checks: list[CheckResult] = field(default_factory=list)
    oracle: Optional[OracleResult] = None
    abstraction: Optional[AbstractAutomaton] = None

    def status(self, name: str) -> str:
        return next(c.status for c in self.checks if c.name == name)

    @property
    def passed(self) -> bool:
        return all(c.status == PASS for c in self.checks)

    @property
    def failed(self) -> bool:
        return any(c.status == FAIL for c in self.checks)


def subject(model: Model) -> Model:
    """What the oracle explores: a lone automaton is an open system."""
    if isinstance(model, Network) and len(model.components) == 1:
        return model.components[0]
    return model


def _pruned(model: Model, r: NetworkCipmResult) -> Model:
    return r.pruned.components[0] if isinstance(model, TimedAutomaton) else subject(r.pruned)


def invariant_atoms(r: NetworkCipmResult) -> list[Atom]:
    return [a for c in r.components for inv in c.new_invariants.values() for a in inv]


def check_termination(model: Model, r: NetworkCipmResult) -> CheckResult:
    comps = model.components if isinstance(model, Network) else (model,)
    over = [c.original.name for c, a in zip(r.components, comps)
            if not c.converged or c.iterations > iteration_bound(a)]
    if over:
        return CheckResult("termination", FAIL, "no fixpoint within the bound: " + ", ".join(over))
    return CheckResult("termination", PASS, f"{sum(c.iterations for c in r.components)} iterations")


def check_invariance(r: NetworkCipmResult, o: OracleResult) -> CheckResult:
    """Every reachable concrete state satisfies the strengthened invariant of its location."""
    if not o.conclusive:
        return CheckResult("invariance", INCONCLUSIVE, "oracle truncated or saturated")
    variables = r.original.variables
    bad = []
    for s in sorted(o.reachable):
        values = s.valuation
        u = {v: values[v.name] for v in variables}
        if not r.invariants[s.locs].holds(u):
            bad.append(str(s))
    if bad:
        return CheckResult("invariance", FAIL, f"{len(bad)} states violate it, e.g. {bad[0]}")
    return CheckResult("invariance", PASS, f"{len(o.reachable)} states")


def check_pruning(model: Model, r: NetworkCipmResult, o: OracleResult, cfg: OracleConfig) -> CheckResult:
    """The pruned model reaches exactly what the input reaches, by the same steps."""
    pruned = explore(_pruned(model, r), o.bounds(cfg))
    if not (o.conclusive and pruned.conclusive):
        return CheckResult("pruning", INCONCLUSIVE, "oracle truncated or saturated")
    if pruned.reachable != o.reachable:
        diff = len(pruned.reachable ^ o.reachable)
        return CheckResult("pruning", FAIL, f"reachable sets differ in {diff} states")
    if pruned.witnessed_steps != o.witnessed_steps:
        return CheckResult("pruning", FAIL, "witnessed steps differ")
    removed = {rm.transition for rm in r.removed}
    if any(t in removed for _, t in o.fired):
        return CheckResult("pruning", FAIL, "a removed transition fired")
    n = len(r.removed)
    return CheckResult("pruning", PASS, f"{n} transition{'' if n == 1 else 's'} removed")


def check_simulation(abst: AbstractAutomaton, o: OracleResult) -> CheckResult:
    """Every concrete state and step has an abstract counterpart."""
    if not o.conclusive:
        return CheckResult("simulation", INCONCLUSIVE, "oracle truncated or saturated")
    rep = simulate_check(abst, o.reachable, o.witnessed_steps)
    if not rep.ok:
        first = (rep.unmapped + rep.unreachable_images + rep.missing_transitions)[0]
        return CheckResult("simulation", FAIL, f"{rep.violations} violations, e.g. {first}")
    return CheckResult("simulation", PASS, f"{rep.checked_states} states, {rep.checked_steps} steps")


def check_abstraction(r: NetworkCipmResult, abst: Optional[AbstractAutomaton] = None) -> CheckResult:
    """Abstracting the input or the pruned model reaches the same abstract states."""
    abst = abst or build_abstraction(r)
    full = build_abstraction(r, r.composed.original)
    if full.reachable != abst.reachable:
        return CheckResult("abstraction", FAIL,
                           f"{len(full.reachable ^ abst.reachable)} reachable abstract states differ")
    return CheckResult("abstraction", PASS, f"{len(abst.reachable)} reachable abstract states")


def _direct(name: str, fn: Callable):
    return fn()


def validate_model(model: Model, cfg: OracleConfig = OracleConfig(), run: Callable = _direct) -> Validation:
    """Run CIPM and the abstraction on ``model`` and cross-check them with the oracle.

    ``run(phase, fn)`` wraps each phase, e.g. to time it.
    """
    r = run("cipm", lambda: cipm_network(model))
    v = Validation(model, r)
    v.checks.append(check_termination(model, r))
    o = run("oracle", lambda: explore(subject(model), cfg, invariant_atoms(r)))
    v.oracle = o
    v.checks.append(check_invariance(r, o))
    v.checks.append(check_pruning(model, r, o, cfg))
    v.abstraction = run("abstraction", lambda: build_abstraction(r))
    v.checks.append(check_simulation(v.abstraction, o))
    v.checks.append(check_abstraction(r, v.abstraction))
    return v
