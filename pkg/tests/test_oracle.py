from dataclasses import replace
from fractions import Fraction

import pytest

from conftest import cs
from tabs import load_bundled
from tabs.checks import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    check_invariance,
    check_pruning,
    validate_model,
)
from tabs.cipm import cipm_network
from tabs.constraints import Atom, ConstraintSet, LinearTerm, apply_reset, entails, satisfiable
from tabs.dsl import parse
from tabs.fuzz import corpus
from tabs.model import Network, compose, vector_id
from tabs.oracle import OracleConfig, diff_reachability, explore, max_constant


def one(text):
    return parse(text).components[0]


def point(state, variables):
    """The valuation of ``state`` as a conjunction of equalities."""
    vals = state.valuation
    atoms = []
    for v in variables:
        q = Fraction(vals[v.name])
        atoms.append(Atom.normal(LinearTerm.of({v: q.denominator}, -q.numerator), "=="))
    return ConstraintSet(tuple(atoms))


def step_is_valid(a, src, dst, kind, g):
    """Re-check one witnessed step with the constraint engine."""
    vs = a.variables
    here, there = point(src, vs), point(dst, vs)
    sid, did = vector_id(src.locs), vector_id(dst.locs)
    if not satisfiable(here & a.invariant(sid)) or not satisfiable(there & a.invariant(did)):
        return False
    if kind == "delay":
        later = {v: src.valuation[v.name] + (g if v.clock else 0) for v in vs}
        return sid == did and all(dst.valuation[v.name] == later[v] for v in vs)
    for t in a.transitions:
        if t.source != sid or t.target != did:
            continue
        pre = here & t.guard
        if satisfiable(pre) and entails(apply_reset(pre, t.resets), there):
            return True
    return False


class TestExplore:
    def test_upper_bound_delay(self):
        a = one("automaton A { clock x; init l0; location l0 inv x <= 1; }")
        o = explore(a, OracleConfig(clock_ceiling=3))
        assert sorted(s.valuation["x"] for s in o.reachable) == [0, Fraction(1, 2), 1]
        assert o.conclusive

    def test_ex1_states_satisfy_invariants(self, ex1, ex1_result):
        o = explore(ex1)
        assert o.conclusive and o.locations() == {("l0",), ("l1",)}
        for s in o.reachable:
            assert ex1_result.new_invariants[s.locs[0]].holds({v: s.valuation[v.name] for v in ex1.variables})

    def test_ex2_avoids_l4_and_s1(self, ex2):
        o = explore(ex2)
        assert o.conclusive
        assert not any(s.locs[0] == "l4" or s.locs[1] == "s1" for s in o.reachable)

    def test_lone_automaton_is_open(self, ex2):
        o = explore(ex2.components[0])
        assert ("l1",) in o.locations()

    def test_unmatched_send_never_fires(self):
        net = parse("automaton A { init a0; location a0; location a1; a0 -> a1 on !go; }"
                    "automaton B { init b0; location b0; }")
        assert explore(net).locations() == {("a0", "b0")}

    def test_initial_invariant_violated(self):
        a = one("automaton A { clock x; init l0; location l0 inv x >= 1; }")
        assert explore(a).reachable == set()

    def test_truncation(self, ex2):
        o = explore(ex2, OracleConfig(step_bound=10))
        assert o.truncated and not o.conclusive

    def test_integer_saturation(self):
        a = one("automaton A { int n; init l0; location l0; l0 -> l0 do n := n + 1; }")
        o = explore(a)
        assert o.saturated and not o.conclusive
        assert max(s.valuation["n"] for s in o.reachable) == o.int_bound

    def test_fired_transitions_are_witnessed(self, ex1):
        o = explore(ex1)
        assert {t for _, t in o.fired} == {t for t in ex1.transitions if t.target != "l2"}
        assert any(k == "discrete" for _, _, k in o.witnessed_steps)

    def test_rejects_bad_granularity(self):
        with pytest.raises(ValueError):
            OracleConfig(time_granularity=Fraction(2, 3))

    def test_max_constant(self, ex2):
        assert max_constant(ex2) == 2


@pytest.mark.parametrize("name", ["ex1.ta", "ex2.ta", "empty.ta"])
def test_saturation_consistency(name):
    net = load_bundled(name)
    model = net.components[0] if len(net.components) == 1 else net
    base = explore(model)
    c = base.ceiling
    bigger = explore(model, OracleConfig(clock_ceiling=c + 1))
    assert base.locations() == bigger.locations()


def test_saturation_consistency_fuzzed():
    for a in corpus(30, seed=7):
        base = explore(a)
        if base.conclusive:
            assert explore(a, base.bounds(OracleConfig(clock_ceiling=base.ceiling + 1))).locations() == base.locations()


def test_granularity_refinement_is_monotone():
    for a in corpus(30, seed=8):
        coarse = explore(a, OracleConfig(time_granularity=Fraction(1, 1)))
        fine = explore(a, coarse.bounds(OracleConfig(time_granularity=Fraction(1, 2))))
        if coarse.conclusive and fine.conclusive:
            assert coarse.locations() <= fine.locations()


@pytest.mark.parametrize("fixture", ["ex1", "ex2"])
def test_steps_recheck_with_engine(fixture, request):
    model = request.getfixturevalue(fixture)
    a = compose(model) if isinstance(model, Network) else model
    o = explore(model)
    g = OracleConfig().time_granularity
    for src, dst, kind in o.witnessed_steps:
        assert step_is_valid(a, src, dst, kind, g), (src, dst, kind)


class TestDiffReachability:
    def test_reflexive(self, ex1, ex2):
        assert diff_reachability(ex1, ex1)
        assert diff_reachability(ex2, ex2)

    def test_ex1_pruned(self, ex1, ex1_result):
        assert diff_reachability(ex1, ex1_result.pruned) is True

    def test_deleting_a_firing_transition(self, ex1):
        fired = next(t for t in ex1.transitions if t.source != t.target and t.target == "l1")
        broken = ex1.with_transitions(t for t in ex1.transitions if t != fired)
        assert diff_reachability(ex1, broken) is False

    def test_inconclusive(self, ex2):
        assert diff_reachability(ex2, ex2, OracleConfig(step_bound=10)) is None


class TestChecks:
    def test_fixtures_pass(self, ex1, ex2):
        for model in (ex1, ex2):
            v = validate_model(model)
            assert v.passed, [str(c) for c in v.checks]

    def test_keeping_idle_transitions_still_passes(self, ex1):
        r = cipm_network(ex1)
        # the idle l1 -> l2 stays in the model handed to the pruning check
        kept = replace(r, pruned=Network((ex1,)), components=[replace(r.components[0], removed=[])])
        assert len(kept.pruned.components[0].transitions) == 4
        assert check_pruning(ex1, kept, explore(ex1), OracleConfig()).status == PASS

    def test_deleting_a_firing_transition_fails(self, ex1):
        r = cipm_network(ex1)
        short = ex1.with_transitions(ex1.transitions[1:])
        assert check_pruning(ex1, replace(r, pruned=Network((short,))), explore(ex1), OracleConfig()).status == FAIL

    def test_corrupted_invariant_fails(self, ex1):
        r = cipm_network(ex1)
        r.invariants[("l1",)] = cs("x <= y && y <= 0")
        o = explore(ex1)
        assert check_invariance(r, o).status == FAIL

    def test_truncated_runs_are_inconclusive(self, ex2):
        v = validate_model(ex2, OracleConfig(step_bound=10))
        assert v.status("invariance") == INCONCLUSIVE
        assert not v.passed and not v.failed

    def test_corrupted_network_invariant_fails(self, ex2):
        r = cipm_network(ex2)
        r.invariants[("l2", "s0")] = cs("x <= 1")
        assert check_invariance(r, explore(ex2)).status == FAIL


def test_unconstrained_clock_stays_finite():
    a = one("automaton A { clock x; init l0; location l0; }")
    o = explore(a)
    assert o.conclusive
    values = {s.valuation["x"] for s in o.reachable}
    assert {Fraction(k, 2) for k in range(int(o.ceiling * 2) + 1)} <= values
    assert len(values) <= 2 * int(o.ceiling * 2) + 1
