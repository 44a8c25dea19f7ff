import json

import pytest

from faultkit.boolexpr import parse_expr
from faultkit.model import Trace, parse_model
from faultkit.tfpg import (INF, ActivationTrace, NodeMap, Tfpg, TfpgEdge,
                           TfpgError, activation_trace_from_json,
                           behavioral_validate, check_trace_consistency,
                           enumerate_consistent_traces, export_tfpg_dot,
                           induced_activation_trace, parse_tfpg, tfpg_to_json,
                           tighten_edges, validate_structure)

from .conftest import corpus_json
from .oracles import (naive_enumerate_consistent, naive_trace_consistent,
                      trace_signature)


def tiny_graph(tmin=0, tmax=1, modes=("on",)):
    return Tfpg(modes, {"f": "FM", "d": "OR"},
                [TfpgEdge("f", "d", tmin, tmax, tuple(sorted(modes)))])


def at(g, horizon, timeline, **times):
    full = {n: times.get(n) for n in g.nodes}
    return ActivationTrace(horizon, tuple(timeline), full)


class TestStructure:
    def test_clean_single_edge(self):
        assert validate_structure(tiny_graph()) == []

    def test_missing_incoming_edge_is_necessity_finding(self):
        g = Tfpg(("on",), {"f": "FM", "d": "OR", "lonely": "AND"},
                 [TfpgEdge("f", "d", 0, 1, ("on",))])
        kinds = {f.kind for f in validate_structure(g)}
        assert "necessity" in kinds

    def test_mode_gap_is_possibility_finding(self, tfpg_modegap):
        findings = validate_structure(tfpg_modegap)
        assert [f for f in findings if f.kind == "possibility" and f.subject == "d2"]
        assert not [f for f in findings if f.subject == "d1"]

    def test_bad_interval_and_unknown_mode(self):
        g = Tfpg(("on",), {"f": "FM", "d": "OR"},
                 [TfpgEdge("f", "d", 3, 1, ("off",))])
        kinds = [f.kind for f in validate_structure(g)]
        assert kinds.count("consistency") >= 2

    def test_edge_into_fm_flagged(self):
        g = Tfpg(("on",), {"f": "FM", "g": "FM", "d": "OR"},
                 [TfpgEdge("f", "g", 0, 1, ("on",)), TfpgEdge("f", "d", 0, 1, ("on",))])
        assert any(f.kind == "consistency" and "incoming" in f.detail
                   for f in validate_structure(g))

    def test_cycle_warning(self):
        g = Tfpg(("on",), {"f": "FM", "d1": "OR", "d2": "OR"},
                 [TfpgEdge("f", "d1", 0, 1, ("on",)),
                  TfpgEdge("d1", "d2", 0, 1, ("on",)),
                  TfpgEdge("d2", "d1", 0, 1, ("on",))])
        assert {f.subject for f in validate_structure(g)
                if f.kind == "cycle-warning"} == {"d1", "d2"}

    def test_corpus_graphs_have_no_errors(self, tfpg_power, tfpg_battery):
        for g in (tfpg_power, tfpg_battery):
            assert validate_structure(g) == []


class TestTraceConsistency:
    def test_simple_propagation(self):
        g = tiny_graph(tmin=1, tmax=2)
        ok, _ = check_trace_consistency(g, at(g, 4, ["on"] * 5, f=0, d=2))
        assert ok

    def test_late_activation_and_missed_deadline(self):
        g = tiny_graph(tmin=1, tmax=2)
        ok, violations = check_trace_consistency(g, at(g, 6, ["on"] * 7, f=0, d=5))
        assert not ok
        assert violations[0].kind == "or-justification"

    def test_inevitability_when_window_completes(self):
        g = tiny_graph(tmin=1, tmax=2)
        ok, violations = check_trace_consistency(g, at(g, 6, ["on"] * 7, f=0))
        assert not ok
        assert violations[0].kind == "or-inevitability"

    def test_corpus_power_traces(self, tfpg_power):
        for name, expect_ok, kind in (("power_trace_ok", True, None),
                                      ("power_trace_late", False, "or-justification"),
                                      ("power_trace_cancel", True, None)):
            doc = corpus_json(f"{name}.json")
            trace = activation_trace_from_json(doc, tfpg_power)
            ok, violations = check_trace_consistency(tfpg_power, trace)
            assert ok == expect_ok, name
            if kind:
                assert violations[0].kind == kind

    def test_mode_switch_cancels_pending_edge(self):
        g = tiny_graph(tmin=0, tmax=2, modes=("on", "off"))
        g = Tfpg(("on", "off"), g.nodes, [TfpgEdge("f", "d", 0, 2, ("on",))])
        # enabled run [0,0] is shorter than the window: nothing is forced
        ok, _ = check_trace_consistency(g, at(g, 4, ["on", "off", "off", "off", "off"], f=0))
        assert ok

    def test_reentry_restarts_the_clock(self):
        g = Tfpg(("on", "off"), {"f": "FM", "d": "OR"},
                 [TfpgEdge("f", "d", 2, 2, ("on",))])
        timeline = ["on", "off", "on", "on", "on", "on"]
        # clock restarts at the re-entry step 2: activation lands at 4
        ok, _ = check_trace_consistency(g, at(g, 5, timeline, f=0, d=4))
        assert ok
        # measuring from the source activation would allow 2: inconsistent
        ok, violations = check_trace_consistency(g, at(g, 5, timeline, f=0, d=2))
        assert not ok and violations[0].kind == "or-justification"
        # and the restarted window forces activation by step 4
        ok, violations = check_trace_consistency(g, at(g, 5, timeline, f=0))
        assert not ok and violations[0].kind == "or-inevitability"

    def test_and_needs_every_edge(self, tfpg_power):
        doc = corpus_json("power_trace_ok.json")
        trace = activation_trace_from_json(doc, tfpg_power)
        trace.times["d_halt"] = 6  # outside d_overheat's [0,1] window
        ok, violations = check_trace_consistency(tfpg_power, trace)
        assert not ok
        assert any(v.kind == "and-justification" and v.node == "d_halt"
                   for v in violations)

    def test_malformed_trace_rejected(self, tfpg_power):
        with pytest.raises(TfpgError):
            check_trace_consistency(
                tfpg_power, ActivationTrace(2, ("primary",), {}))
        with pytest.raises(TfpgError):
            check_trace_consistency(
                tfpg_power,
                ActivationTrace(1, ("primary", "lunar"), {"fm_gen": None}))

    def test_violations_replay(self, tfpg_power):
        doc = corpus_json("power_trace_late.json")
        trace = activation_trace_from_json(doc, tfpg_power)
        first = check_trace_consistency(tfpg_power, trace)
        second = check_trace_consistency(tfpg_power, trace)
        assert first == second and not first[0]


class TestEnumeration:
    def test_single_fm_count(self):
        g = Tfpg(("on", "off"), {"f": "FM"}, [])
        traces = list(enumerate_consistent_traces(g, 1))
        # f at 0, at 1, or never; times every mode timeline of length 2
        assert len(traces) == 3 * 2 ** 2

    def test_forced_chain_single_choice(self):
        g = tiny_graph(tmin=1, tmax=1)
        traces = list(enumerate_consistent_traces(g, 3, fm_inputs={"f": 0}))
        activations = {tr.times["d"] for tr in traces}
        assert activations == {1}  # bounds plus inevitability force exactly 1

    @pytest.mark.parametrize("graph,horizon", [
        ("tiny", 4), ("modegap", 4), ("power", 3), ("battery", 3)])
    def test_matches_naive_double_loop(self, request, graph, horizon,
                                       tfpg_power, tfpg_modegap, tfpg_battery):
        g = {"tiny": tiny_graph(1, 2), "modegap": tfpg_modegap,
             "power": tfpg_power, "battery": tfpg_battery}[graph]
        smart = {trace_signature(t) for t in enumerate_consistent_traces(g, horizon)}
        naive = {trace_signature(t) for t in naive_enumerate_consistent(g, horizon)}
        assert smart == naive

    def test_membership_cross_check(self, tfpg_power):
        smart = {trace_signature(t)
                 for t in enumerate_consistent_traces(tfpg_power, 3)}
        for trace in naive_enumerate_consistent(tfpg_power, 3):
            ok, _ = check_trace_consistency(tfpg_power, trace)
            assert ok == (trace_signature(trace) in smart)


class TestBehavioral:
    def test_permissive_graph_is_complete(self, battery, battery_map):
        g = Tfpg(("phase_a", "phase_b", "phase_c"),
                 {"fm_b1": "FM", "fm_b2": "FM", "d_low": "OR", "d_dead": "OR"},
                 [TfpgEdge(u, v, 0, INF, ("phase_a", "phase_b", "phase_c"))
                  for u in ("fm_b1", "fm_b2") for v in ("d_low", "d_dead")])
        assert behavioral_validate(g, battery, battery_map, 6).complete

    def test_corpus_pair_complete(self, tfpg_battery, battery, battery_map):
        assert behavioral_validate(tfpg_battery, battery, battery_map, 8).complete

    def test_too_small_tmax_is_incomplete(self, battery, battery_map, tfpg_battery):
        doc = tfpg_to_json(tfpg_battery)
        for edge in doc["edges"]:
            if edge["to"] == "d_dead":
                edge["tmax"] = 1
        g = parse_tfpg(json.dumps(doc))
        result = behavioral_validate(g, battery, battery_map, 6)
        assert not result.complete
        assert battery.is_trace(result.witness)
        # the witness replays to the same violations
        induced = induced_activation_trace(g, battery, battery_map, result.witness)
        ok, violations = check_trace_consistency(g, induced)
        assert not ok and tuple(violations) == result.violations

    def test_witness_is_lexicographically_least(self, battery, battery_map,
                                                tfpg_battery):
        doc = tfpg_to_json(tfpg_battery)
        for edge in doc["edges"]:
            if edge["to"] == "d_dead":
                edge["tmax"] = 1
        g = parse_tfpg(json.dumps(doc))
        result = behavioral_validate(g, battery, battery_map, 6)
        for tr in battery.enumerate_traces(7):
            induced = induced_activation_trace(g, battery, battery_map, tr)
            ok, _ = check_trace_consistency(g, induced)
            if not ok:
                assert tr.steps == result.witness.steps
                break

    def test_unmapped_node_rejected(self, battery, tfpg_battery):
        nm = NodeMap({"fm_b1": parse_expr("b1_fail")},
                     {"phase_a": "phase_a", "phase_b": "phase_b",
                      "phase_c": "phase_c"})
        with pytest.raises(TfpgError, match="unmapped"):
            behavioral_validate(tfpg_battery, battery, nm, 4)

    def test_mode_map_must_be_bijection(self, battery, tfpg_battery, battery_map):
        nm = NodeMap(dict(battery_map.exprs), {"phase_a": "phase_a"})
        with pytest.raises(TfpgError, match="bijection"):
            behavioral_validate(tfpg_battery, battery, nm, 4)

    def test_completeness_stable_under_widening(self, battery, battery_map,
                                                tfpg_battery):
        doc = tfpg_to_json(tfpg_battery)
        for edge in doc["edges"]:
            edge["tmax"] = "inf"
        widened = parse_tfpg(json.dumps(doc))
        assert behavioral_validate(widened, battery, battery_map, 6).complete

    def test_worker_count_does_not_change_verdict(self, battery, battery_map,
                                                  tfpg_battery):
        one = behavioral_validate(tfpg_battery, battery, battery_map, 6, jobs=1)
        many = behavioral_validate(tfpg_battery, battery, battery_map, 6, jobs=4)
        assert (one.complete, one.witness) == (many.complete, many.witness)


EXACT_TWO_STEP = {
    "atoms": ["fault", "warn"],
    "faults": ["fault"],
    "observables": ["warn"],
    "modes": [],
    "states": {"n": {},
               "f0": {"fault": True},
               "f1": {"fault": True},
               "f2": {"fault": True, "warn": True}},
    "initial": ["n"],
    "transitions": [["n", "n"], ["n", "f0"], ["f0", "f1"], ["f1", "f2"],
                    ["f2", "f2"]],
}


class TestTighten:
    def exact_two_step(self):
        m = parse_model(json.dumps(EXACT_TWO_STEP))
        g = Tfpg(("nominal",), {"fault": "FM", "d_warn": "OR"},
                 [TfpgEdge("fault", "d_warn", 0, 10, ("nominal",))])
        nm = NodeMap({"fault": parse_expr("fault"), "d_warn": parse_expr("warn")}, {})
        return m, g, nm

    def test_exact_delay_discovered(self):
        m, g, nm = self.exact_two_step()
        result = tighten_edges(g, m, nm, 8)
        edge = result.tfpg.edges[0]
        assert (edge.tmin, edge.tmax) == (2, 2)

    def test_exact_bounds_are_fixpoint(self):
        m, g, nm = self.exact_two_step()
        once = tighten_edges(g, m, nm, 8)
        twice = tighten_edges(once.tfpg, m, nm, 8)
        assert tfpg_to_json(twice.tfpg) == tfpg_to_json(once.tfpg)

    def test_never_exercised_edge_reported_and_unchanged(self):
        m, g, nm = self.exact_two_step()
        g2 = Tfpg(("nominal",), {**g.nodes, "d_ghost": "OR"},
                  list(g.edges) + [TfpgEdge("fault", "d_ghost", 3, INF, ("nominal",))])
        nm2 = NodeMap({**nm.exprs, "d_ghost": parse_expr("false")}, {})
        result = tighten_edges(g2, m, nm2, 8)
        ghost = [e for e in result.tfpg.edges if e.dst == "d_ghost"][0]
        assert (ghost.tmin, ghost.tmax) == (3, INF)
        assert any("d_ghost" in desc for desc in result.never_exercised)

    def test_incomplete_input_rejected(self):
        # a bounded edge to an unreachable discrepancy forces activations
        # the model never produces; tightening refuses to silently fix it
        m, g, nm = self.exact_two_step()
        g2 = Tfpg(("nominal",), {**g.nodes, "d_ghost": "OR"},
                  list(g.edges) + [TfpgEdge("fault", "d_ghost", 3, 7, ("nominal",))])
        nm2 = NodeMap({**nm.exprs, "d_ghost": parse_expr("false")}, {})
        with pytest.raises(TfpgError, match="not complete"):
            tighten_edges(g2, m, nm2, 8)

    def test_promotion_on_unguaranteed_propagation(self, intermittent):
        g = Tfpg(("nominal",), {"fault": "FM", "d_warn": "OR"},
                 [TfpgEdge("fault", "d_warn", 0, 10, ("nominal",))])
        nm = NodeMap({"fault": parse_expr("fault"), "d_warn": parse_expr("warn")}, {})
        result = tighten_edges(g, intermittent, nm, 6)
        edge = result.tfpg.edges[0]
        assert edge.tmin == 1 and edge.tmax == INF
        assert any(c.promoted for c in result.changes)
        assert behavioral_validate(result.tfpg, intermittent, nm, 6).complete

    def test_tighten_battery_preserves_completeness(self, tfpg_battery, battery,
                                                    battery_map):
        result = tighten_edges(tfpg_battery, battery, battery_map, 8)
        assert behavioral_validate(result.tfpg, battery, battery_map, 8).complete
        again = tighten_edges(result.tfpg, battery, battery_map, 8)
        assert tfpg_to_json(again.tfpg) == tfpg_to_json(result.tfpg)


class TestEdgeIndexing:
    def test_replace_bounds_mapped_tracks_parallel_edges(self):
        g = Tfpg(("on",), {"f": "FM", "d": "OR"},
                 [TfpgEdge("f", "d", 0, 10, ("on",)),
                  TfpgEdge("f", "d", 5, 6, ("on",))])
        new, mapping = g.replace_bounds_mapped({0: (7, 8)})
        # the modified edge now sorts after the untouched parallel edge
        assert [(e.tmin, e.tmax) for e in new.edges] == [(5, 6), (7, 8)]
        assert mapping == [1, 0]


class TestSerialization:
    def test_round_trip(self, tfpg_power):
        doc = tfpg_to_json(tfpg_power)
        assert tfpg_to_json(parse_tfpg(json.dumps(doc))) == doc

    def test_infinite_bound_round_trip(self):
        g = tiny_graph(0, INF)
        doc = tfpg_to_json(g)
        assert doc["edges"][0]["tmax"] == "inf"
        assert parse_tfpg(json.dumps(doc)).edges[0].tmax == INF

    def test_dot_shapes(self, tfpg_power):
        dot = export_tfpg_dot(tfpg_power)
        assert '"fm_gen" [shape=box, style=dotted];' in dot
        assert '"d_halt" [shape=box];' in dot
        assert '"d_press" [shape=circle];' in dot
