import pytest

from conftest import N, X, Y, cs
from tabs.cipm import (
    IdleReason,
    cipm,
    cipm_network,
    initial_condition,
    is_idle,
    iteration_bound,
    location_invariant,
    propagate,
)
from tabs.constraints import TRUE, Atom, ConstraintSet, LinearTerm, entails, equivalent
from tabs.dsl import parse
from tabs.fuzz import corpus
from tabs.model import Network, Transition, product_locations, vector_id
from tabs.oracle import explore


def one(text):
    return parse(text).components[0]


class TestIsIdle:
    def test_guard_contradicts_source(self):
        t = Transition("l", "m", guard=cs("x <= y"))
        src = ConstraintSet((Atom.make(LinearTerm.var(X), ">", LinearTerm.of({Y: 1}, 3)),))
        assert is_idle(t, src, TRUE) is IdleReason.GUARD_CONTRADICTS_SOURCE_INVARIANT

    def test_true_guard_is_not_idle(self):
        assert is_idle(Transition("l", "m"), TRUE, TRUE) is None

    def test_unsatisfiable_guard(self):
        t = Transition("l", "m", guard=ConstraintSet((Atom.make(LinearTerm.var(X), "<", LinearTerm.var(X)),)))
        assert is_idle(t, TRUE, TRUE) is IdleReason.UNSATISFIABLE_GUARD

    def test_post_violates_target(self):
        t = Transition("l", "m", resets=((X, LinearTerm.const(0)),))
        assert is_idle(t, TRUE, cs("x >= 1")) is IdleReason.POST_VIOLATES_TARGET_INVARIANT


class TestPropagate:
    def test_guard_survives_delay(self):
        assert propagate(Transition("l1", "l2", guard=cs("y < x")), TRUE) == cs("y < x")

    def test_reset_is_not_delay_stable(self):
        t = Transition("l", "m", resets=((X, LinearTerm.const(0)),))
        assert propagate(t, TRUE) == TRUE
        assert propagate(t, cs("x <= y")) == TRUE

    def test_integer_facts_survive(self):
        t = Transition("l", "m", guard=cs("x >= 2"), resets=((N, LinearTerm.const(3)),))
        assert propagate(t, TRUE) == cs("x >= 2 && n == 3")


class TestLocationInvariant:
    def test_single_incoming(self):
        t = Transition("l1", "l2", guard=cs("y < x"))
        assert location_invariant("l2", [(t, TRUE)], TRUE) == cs("y < x")

    def test_no_incoming_keeps_original(self):
        assert location_invariant("l0", [], cs("y <= 1")) == cs("y <= 1")

    def test_join_is_intersection(self):
        t1 = Transition("a", "l", guard=cs("x <= y"))
        t2 = Transition("b", "l", guard=cs("x <= y && n == 3"))
        assert location_invariant("l", [(t1, TRUE), (t2, TRUE)], TRUE) == cs("x <= y")

    def test_join_uses_entailment(self):
        t1 = Transition("a", "l", guard=cs("x >= 3"))
        t2 = Transition("b", "l", guard=cs("x >= 2"))
        assert location_invariant("l", [(t1, TRUE), (t2, TRUE)], TRUE) == cs("x >= 2")

    def test_initial_condition(self, ex2):
        assert initial_condition(ex2.components[0]) == cs("n == 0")


class TestEx1:
    def test_invariants(self, ex1_result):
        expected = {"l0": "y <= 1", "l1": "x <= y", "l2": "y < x"}
        for lid, text in expected.items():
            assert equivalent(ex1_result.new_invariants[lid], cs(text))

    def test_pruned_transition(self, ex1_result):
        assert [(str(r.transition), r.reason) for r in ex1_result.removed] == [
            ("l1 -> l2", IdleReason.POST_VIOLATES_TARGET_INVARIANT)]
        assert ex1_result.unreachable == {"l2"}
        assert len(ex1_result.pruned.transitions) == 3

    def test_strengthening_entails_original(self, ex1, ex1_result):
        for loc in ex1.locations:
            assert entails(ex1_result.new_invariants[loc.id], loc.invariant)


def test_unsatisfiable_guard_only_pruning():
    a = one("automaton A { clock x; init l0; location l0; location l1; "
            "l0 -> l1 when x < 1 && x > 2; l0 -> l1 when x >= 1; }")
    r = cipm(a)
    assert [rm.reason for rm in r.removed] == [IdleReason.UNSATISFIABLE_GUARD]
    assert r.pruned.transitions == a.transitions[1:]


def test_no_constraints_is_immediate_fixpoint():
    a = one("automaton A { clock x; init l0; location l0; location l1; l0 -> l1; l1 -> l0; }")
    r = cipm(a)
    assert r.removed == [] and r.converged
    assert all(r.new_invariants[l.id] == l.invariant for l in a.locations)


def test_iteration_bound_falls_back_to_original():
    a = one("automaton A { clock x; int n; init l0; location l0 inv n <= 3; location l1; "
            "l0 -> l1 when x >= 1 do x := 0; l1 -> l0 when n == 0; }")
    r = cipm(a, max_iterations=1)
    assert not r.converged and r.warnings
    assert r.new_invariants["l1"] == TRUE
    full = cipm(a)
    assert full.converged and full.iterations <= iteration_bound(a)


class TestNetwork:
    def test_component_results(self, ex2_result):
        a = ex2_result.components[0]
        assert equivalent(a.new_invariants["l1"], cs("n == 1"))
        assert equivalent(a.new_invariants["l3"], cs("n == 1 && x >= 2"))
        assert ex2_result.components[1].removed == []

    def test_vector_invariants_are_conjunctions(self, ex2, ex2_result):
        a, b = ex2_result.components
        for vec in product_locations(ex2):
            assert ex2_result.invariants[vec] == a.new_invariants[vec[0]] & b.new_invariants[vec[1]]

    def test_l4_and_s1_unreachable(self, ex2_result):
        bad = {vector_id(v) for v in product_locations(ex2_result.original) if v[0] == "l4" or v[1] == "s1"}
        assert bad <= ex2_result.composed.unreachable

    def test_single_component_matches_cipm(self, ex1):
        r = cipm_network(Network((ex1,)))
        assert r.composed.new_invariants == cipm(ex1).new_invariants

    def test_independent_components(self):
        net = parse("automaton A { clock x; init a0; location a0 inv x <= 2; location a1; a0 -> a1 when x >= 1; }"
                    "automaton B { clock z; init b0; location b0; location b1 inv z <= 1; b0 -> b1 do z := 0; }")
        r = cipm_network(net)
        o = explore(net)
        for s in o.reachable:
            u = {v: s.valuation[v.name] for v in net.variables}
            assert r.invariants[s.locs].holds(u)
        assert r.invariants[("a1", "b1")] == cs("x >= 1") & cs("z <= 1")


@pytest.mark.parametrize("seed", [1, 2])
def test_fuzzed_results_are_well_formed(seed):
    for a in corpus(40, seed=seed):
        r = cipm(a)
        assert r.iterations <= iteration_bound(a)
        kept = set(r.pruned.transitions)
        assert kept | {rm.transition for rm in r.removed} == set(a.transitions)
        for loc in a.locations:
            assert entails(r.new_invariants[loc.id], loc.invariant)
