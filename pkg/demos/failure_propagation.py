#!/usr/bin/env python3
"""Timed failure propagation graphs end to end: structural validation,
activation-trace checking with mode switches, behavioral validation against
the battery model, delay-bound tightening, and synthesis from cut sets.
"""

import json
from pathlib import Path

from faultkit import (behavioral_validate, check_trace_consistency,
                      export_tfpg_dot, load_model, load_node_map,
                      load_synthesis_config, load_tfpg, synthesize_tfpg,
                      tighten_edges, validate_structure)
from faultkit.tfpg import activation_trace_from_json

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def main():
    power = load_tfpg(CORPUS / "tfpg_power.json")
    print("power TFPG structure:", validate_structure(power) or "clean")

    modegap = load_tfpg(CORPUS / "tfpg_modegap.json")
    print("\na graph whose only path needs disjoint modes on its two hops:")
    for finding in validate_structure(modegap):
        print("  ", finding)

    print("\nchecking activation traces against the propagation semantics:")
    for name in ("power_trace_ok", "power_trace_late", "power_trace_cancel"):
        with open(CORPUS / f"{name}.json", encoding="utf-8") as fh:
            trace = activation_trace_from_json(json.load(fh), power)
        ok, violations = check_trace_consistency(power, trace)
        print(f"  {name}: {'consistent' if ok else 'INCONSISTENT'}")
        for violation in violations:
            print("     ", violation)

    battery = load_model(CORPUS / "battery.json")
    graph = load_tfpg(CORPUS / "tfpg_battery.json")
    node_map = load_node_map(CORPUS / "battery_map.json")
    result = behavioral_validate(graph, battery, node_map, 8)
    print(f"\nbattery TFPG complete for the model at 8 steps: {result.complete}")

    tightened = tighten_edges(graph, battery, node_map, 8)
    print("tightened delay bounds:")
    for change in tightened.changes:
        print(f"  {change.description}: {change.old} -> {change.new}")

    config = load_synthesis_config(CORPUS / "battery_synth.json")
    synthesized = synthesize_tfpg(battery, config, 8)
    print("\nsynthesized from minimal cut sets (complete by construction):")
    print(export_tfpg_dot(synthesized.tfpg))


if __name__ == "__main__":
    main()
