#!/usr/bin/env python3
"""Diagnosability checking with the twin plant.

The sensor-delay model reveals a fault on the warn line exactly two steps
after it happens.  Alarms demanding the exact fault time one step later are
unrealizable; giving the detector a bounded window of two or more steps
makes the system diagnosable.  The intermittent model may hide the fault
forever, so no global guarantee exists, yet individual revealing runs are
still trace-diagnosable.
"""

from pathlib import Path

from faultkit import (AlarmSpec, BoundedDelay, ExactDelay, FiniteDelay, Trace,
                      check_diagnosability, check_trace_diagnosability,
                      load_model, parse_expr)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def show(model, spec):
    verdict = check_diagnosability(model, spec)
    if verdict.diagnosable:
        print(f"  {spec.delay}: diagnosable")
    else:
        pair = verdict.pair
        print(f"  {spec.delay}: NOT diagnosable; confusable runs "
              f"{list(pair.trace1.steps)} vs {list(pair.trace2.steps)} "
              f"(condition at step {pair.t})")


def main():
    fault = parse_expr("fault")
    sensor = load_model(CORPUS / "sensor_delay.json")
    print("sensor-delay model (fault visible two steps later):")
    for delay in (ExactDelay(1), ExactDelay(2), BoundedDelay(1), BoundedDelay(3),
                  FiniteDelay()):
        show(sensor, AlarmSpec("A", fault, delay))

    intermittent = load_model(CORPUS / "intermittent.json")
    print("\nintermittent model (fault may stay hidden forever):")
    for delay in (ExactDelay(1), BoundedDelay(3), FiniteDelay()):
        show(intermittent, AlarmSpec("A", fault, delay))

    print("\nper-run verdicts on the intermittent model:")
    spec = AlarmSpec("A", fault, ExactDelay(1), diag="trace")
    revealing = Trace(("n", "fh", "fr", "fr"))
    hidden = Trace(("n", "fh", "fh", "fh"))
    for label, tr in (("revealing", revealing), ("hidden", hidden)):
        verdict = check_trace_diagnosability(intermittent, spec, tr, 1)
        if verdict.diagnosable:
            print(f"  {label} run {list(tr.steps)}: trace-diagnosable")
        else:
            print(f"  {label} run {list(tr.steps)}: not trace-diagnosable; "
                  f"confused with {list(verdict.confuser.steps)}")


if __name__ == "__main__":
    main()
