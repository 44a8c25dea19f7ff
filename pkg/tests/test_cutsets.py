import json

import pytest
from hypothesis import given, settings, strategies as st

from faultkit.cutsets import (build_fault_tree, enumerate_mcs, evaluate_probability,
                              export_fault_tree_dot, final_mcs, is_cut_set,
                              mcs_to_json, probability_by_enumeration,
                              probability_by_inclusion_exclusion)
from faultkit.errors import ExpressionError
from faultkit.model import parse_model

from .oracles import brute_force_mcs


class TestIsCutSet:
    def test_all_faults_allows_reachable_event(self, battery):
        assert is_cut_set(battery, "system_dead", battery.fault_atoms)

    def test_empty_set_cannot_reach_fault_literal(self, battery):
        assert not is_cut_set(battery, "b1_fail", frozenset())

    def test_battery_single_fault_is_not_a_cut(self, battery):
        assert not is_cut_set(battery, "system_dead", {"b1_fail"})
        assert not is_cut_set(battery, "system_dead", {"b2_fail"})
        assert is_cut_set(battery, "system_dead", {"b1_fail", "b2_fail"})

    def test_unknown_atom_in_event(self, battery):
        with pytest.raises(ExpressionError):
            is_cut_set(battery, "no_such_atom", set())

    def test_non_fault_members_rejected(self, battery):
        with pytest.raises(ExpressionError):
            is_cut_set(battery, "system_dead", {"power_low"})

    @given(st.sets(st.sampled_from(["b1_fail", "b2_fail"])),
           st.sets(st.sampled_from(["b1_fail", "b2_fail"])))
    @settings(max_examples=30, deadline=None)
    def test_monotone(self, battery, small, extra):
        large = small | extra
        if is_cut_set(battery, "system_dead", small):
            assert is_cut_set(battery, "system_dead", large)


class TestEnumerateMcs:
    def test_battery(self, battery):
        report = final_mcs(battery, "system_dead")
        assert mcs_to_json(report.mcs) == [["b1_fail", "b2_fail"]]
        assert report.exhausted
        assert not report.fault_free_reachable

    def test_unreachable_event(self, battery):
        report = final_mcs(battery, "b1_fail & !power_low")
        assert report.mcs == ()
        assert report.exhausted

    def test_event_true_initially_yields_empty_cut_set(self, battery):
        report = final_mcs(battery, "!system_dead")
        assert report.mcs == (frozenset(),)
        assert report.fault_free_reachable

    def test_layers_are_monotone_and_guaranteed(self, battery):
        reports = list(enumerate_mcs(battery, "power_low"))
        assert [r.completed_cardinality for r in reports] == [0, 1, 2]
        for earlier, later in zip(reports, reports[1:]):
            assert set(earlier.mcs) <= set(later.mcs)
        assert "cardinality <= 1" in reports[1].guarantee

    def test_matches_brute_force(self, battery):
        for tle in ("system_dead", "power_low", "b1_fail | system_dead"):
            expected = brute_force_mcs(battery, tle)
            got = list(final_mcs(battery, tle).mcs)
            assert sorted(got, key=lambda s: (len(s), sorted(s))) == expected

    def test_minimality_witnessed(self, battery):
        report = final_mcs(battery, "system_dead")
        for S in report.mcs:
            assert is_cut_set(battery, "system_dead", S)
            for x in S:
                assert not is_cut_set(battery, "system_dead", S - {x})

    def test_jobs_do_not_change_result(self, battery):
        sequential = [r.mcs for r in enumerate_mcs(battery, "power_low", jobs=1)]
        parallel = [r.mcs for r in enumerate_mcs(battery, "power_low", jobs=4)]
        assert sequential == parallel


class TestFaultTree:
    def test_single_mcs(self):
        tree = build_fault_tree([frozenset({"f1", "f2"})], "boom")
        assert tree.gates == (("f1", "f2"),)

    def test_two_gates_sorted(self):
        tree = build_fault_tree([frozenset({"f2", "f3"}), frozenset({"f1"})], "boom")
        assert tree.gates == (("f1",), ("f2", "f3"))

    def test_non_antichain_rejected(self):
        with pytest.raises(ValueError, match="antichain"):
            build_fault_tree([frozenset({"f1"}), frozenset({"f1", "f2"})], "boom")

    def test_dot_single_and_single_leaf_has_four_nodes(self):
        tree = build_fault_tree([frozenset({"f1"})], "boom")
        dot = export_fault_tree_dot(tree)
        labels = [line for line in dot.splitlines() if "[label=" in line]
        assert len(labels) == 4  # top, OR, AND, basic event

    def test_dot_empty_is_unreachable_node(self):
        dot = export_fault_tree_dot(build_fault_tree([], "boom"))
        assert "unreachable" in dot
        assert dot.count("label=") == 1

    def test_battery_tree_matches_golden(self, battery):
        report = final_mcs(battery, "system_dead")
        dot = export_fault_tree_dot(build_fault_tree(report.mcs, "system_dead"))
        assert dot == GOLDEN_BATTERY_DOT


GOLDEN_BATTERY_DOT = """digraph fault_tree {
  rankdir=TB;
  "top" [label="system_dead", shape=box];
  "or" [label="OR", shape=diamond];
  "top" -> "or";
  "and0" [label="AND", shape=invtrapezium];
  "or" -> "and0";
  "and0_b1_fail" [label="b1_fail", shape=circle];
  "and0" -> "and0_b1_fail";
  "and0_b2_fail" [label="b2_fail", shape=circle];
  "and0" -> "and0_b2_fail";
}
"""


class TestProbability:
    def test_certain_event(self):
        assert evaluate_probability([frozenset()], {}) == 1.0

    def test_single_event(self):
        assert evaluate_probability([frozenset({"f1"})], {"f1": 0.1}) == pytest.approx(0.1)

    def test_two_event_conjunction(self):
        # enumerate the four worlds: only {f1,f2} covers the cut set
        p = evaluate_probability([frozenset({"f1", "f2"})], {"f1": 0.5, "f2": 0.5})
        assert p == pytest.approx(0.25)

    def test_empty_family_is_zero(self):
        assert evaluate_probability([], {}) == 0.0

    def test_missing_probability(self):
        with pytest.raises(ValueError, match="missing probability"):
            evaluate_probability([frozenset({"f1"})], {})

    def test_out_of_range(self):
        with pytest.raises(ValueError, match="out of"):
            evaluate_probability([frozenset({"f1"})], {"f1": 1.5})

    @given(st.lists(st.sets(st.sampled_from(["f1", "f2", "f3"]), min_size=1),
                    min_size=1, max_size=4),
           st.tuples(*(st.floats(0.05, 0.95) for _ in range(3))))
    @settings(max_examples=40, deadline=None)
    def test_routes_agree(self, family, values):
        family = [frozenset(s) for s in family]
        probs = dict(zip(["f1", "f2", "f3"], values))
        a = probability_by_enumeration(family, probs)
        b = probability_by_inclusion_exclusion(family, probs)
        assert a == pytest.approx(b, abs=1e-12)
