"""Explicit finite transition systems with fault, observable, and mode labels.

States are explicit and carry full atom valuations.  Faults are permanent:
once a fault atom is true it stays true on every successor.  Observation is
synchronous: an observer sees the observable-atom valuation of every state,
every step.  Fault atoms are allowed to be observable (a trivially
diagnosable configuration).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator

from .boolexpr import Expr, as_expr
from .errors import ModelFormatError, TraceError


@dataclass(frozen=True)
class Trace:
    """A finite run: state ids, consecutive under the transition relation,
    starting in an initial state.  Length = number of states."""

    steps: tuple[str, ...]

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def to_json(self):
        return {"steps": list(self.steps)}


@dataclass(frozen=True)
class Violation:
    """One violated model invariant; violations are data, not exceptions."""

    kind: str
    subject: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.subject}: {self.detail}"


class SystemModel:
    """Immutable after construction; query methods are safe to share."""

    def __init__(self, atoms, fault_atoms, observable_atoms, mode_atoms,
                 states, initial, transitions):
        self.atoms = frozenset(atoms)
        self.fault_atoms = frozenset(fault_atoms)
        self.observable_atoms = frozenset(observable_atoms)
        self.mode_atoms = frozenset(mode_atoms)
        self.states = {sid: dict(val) for sid, val in states.items()}
        self.initial = tuple(sorted(initial))
        self.transitions = frozenset((a, b) for a, b in transitions)
        self._succ = {sid: () for sid in self.states}
        by_src: dict[str, list[str]] = {sid: [] for sid in self.states}
        for a, b in self.transitions:
            by_src[a].append(b)
        for sid, succs in by_src.items():
            self._succ[sid] = tuple(sorted(set(succs)))
        self._obs_atoms_sorted = tuple(sorted(self.observable_atoms))
        self._obs = {
            sid: tuple(bool(self.states[sid].get(a, False)) for a in self._obs_atoms_sorted)
            for sid in self.states
        }

    # -- queries -----------------------------------------------------------

    def successors(self, sid: str) -> tuple[str, ...]:
        if sid not in self.states:
            raise TraceError(f"unknown state {sid!r}")
        return self._succ[sid]

    def valuation(self, sid: str) -> dict[str, bool]:
        return self.states[sid]

    def holds(self, expr: Expr | str, sid: str) -> bool:
        return as_expr(expr).evaluate(self.states[sid])

    def fault_set(self, sid: str) -> frozenset[str]:
        val = self.states[sid]
        return frozenset(a for a in self.fault_atoms if val.get(a, False))

    def observation(self, sid: str) -> tuple[bool, ...]:
        """Canonical observation: bool tuple over sorted observable atoms."""
        return self._obs[sid]

    def observation_dict(self, sid: str) -> dict[str, bool]:
        return dict(zip(self._obs_atoms_sorted, self._obs[sid]))

    @property
    def observable_atoms_sorted(self) -> tuple[str, ...]:
        return self._obs_atoms_sorted

    def mode_of(self, sid: str) -> str | None:
        val = self.states[sid]
        active = [a for a in self.mode_atoms if val.get(a, False)]
        return active[0] if len(active) == 1 else None

    def is_trace(self, tr: Trace) -> bool:
        if len(tr) < 1:
            return False
        if tr[0] not in self.initial:
            return False
        for s in tr.steps:
            if s not in self.states:
                return False
        for a, b in zip(tr.steps, tr.steps[1:]):
            if (a, b) not in self.transitions:
                return False
        return True

    def require_trace(self, tr: Trace) -> None:
        if not self.is_trace(tr):
            raise TraceError(f"not a trace of this model: {list(tr.steps)}")

    def enumerate_traces(self, horizon: int) -> Iterator[Trace]:
        """All traces with exactly `horizon` states, lexicographic order."""
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        stack: list[str] = []

        def walk() -> Iterator[Trace]:
            if len(stack) == horizon:
                yield Trace(tuple(stack))
                return
            for nxt in self._succ[stack[-1]]:
                stack.append(nxt)
                yield from walk()
                stack.pop()

        for init in self.initial:
            stack = [init]
            yield from walk()


def parse_model(text: str) -> SystemModel:
    """Parse the JSON model format.  Referential well-formedness is checked
    here; the behavioral invariants are checked by :func:`validate_model`."""
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicate_keys)
    except _DuplicateKey as dup:
        raise ModelFormatError(f"duplicate state id {dup.key!r}") from None
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"syntax error: {err.msg}", err.lineno, err.colno) from None
    if not isinstance(doc, dict):
        raise ModelFormatError("top level must be an object")
    for key in ("atoms", "states", "initial", "transitions"):
        if key not in doc:
            raise ModelFormatError(f"missing top-level key {key!r}")
    atoms = _name_list(doc["atoms"], "atoms")
    faults = _name_list(doc.get("faults", []), "faults")
    observables = _name_list(doc.get("observables", []), "observables")
    modes = _name_list(doc.get("modes", []), "modes")
    atom_set = set(atoms)
    for group, names in (("faults", faults), ("observables", observables), ("modes", modes)):
        for name in names:
            if name not in atom_set:
                raise ModelFormatError(f"unknown atom {name!r} in {group}")
    if not isinstance(doc["states"], dict) or not doc["states"]:
        raise ModelFormatError("states must be a nonempty object")
    states = {}
    for sid, val in doc["states"].items():
        if not isinstance(val, dict):
            raise ModelFormatError(f"state {sid!r}: valuation must be an object")
        for a, b in val.items():
            if a not in atom_set:
                raise ModelFormatError(f"state {sid!r}: unknown atom {a!r}")
            if not isinstance(b, bool):
                raise ModelFormatError(f"state {sid!r}: atom {a!r} must be a boolean")
        # Unlisted atoms default to false.
        states[sid] = {a: bool(val.get(a, False)) for a in atoms}
    initial = doc["initial"]
    if not isinstance(initial, list) or not initial:
        raise ModelFormatError("initial must be a nonempty list")
    for sid in initial:
        if sid not in states:
            raise ModelFormatError(f"unknown state {sid!r} in initial")
    transitions = doc["transitions"]
    if not isinstance(transitions, list):
        raise ModelFormatError("transitions must be a list")
    pairs = []
    for item in transitions:
        if not (isinstance(item, list) and len(item) == 2):
            raise ModelFormatError(f"transition must be a [from, to] pair, got {item!r}")
        a, b = item
        for sid in (a, b):
            if sid not in states:
                raise ModelFormatError(f"unknown state {sid!r} in transition {item!r}")
        pairs.append((a, b))
    return SystemModel(atoms, faults, observables, modes, states, initial, pairs)


def load_model(path) -> SystemModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def validate_model(m: SystemModel) -> list[Violation]:
    """Check every model invariant; empty report means valid."""
    report: list[Violation] = []
    for sid in sorted(m.states):
        if not m._succ[sid]:
            report.append(Violation("deadlock-freedom", sid, "state has no outgoing transition"))
    for a, b in sorted(m.transitions):
        lost = [f for f in sorted(m.fault_atoms)
                if m.states[a].get(f, False) and not m.states[b].get(f, False)]
        for f in lost:
            report.append(Violation(
                "fault-persistence", f"({a} -> {b})",
                f"fault atom {f!r} is true in {a} but false in {b}"))
    for sid in m.initial:
        active = [f for f in sorted(m.fault_atoms) if m.states[sid].get(f, False)]
        for f in active:
            report.append(Violation(
                "initial-faults-false", sid, f"fault atom {f!r} is true in initial state"))
    if m.mode_atoms:
        for sid in sorted(m.states):
            active = [a for a in sorted(m.mode_atoms) if m.states[sid].get(a, False)]
            if len(active) != 1:
                report.append(Violation(
                    "mode-uniqueness", sid,
                    f"expected exactly one mode atom true, found {active or 'none'}"))
    return report


# -- parsing helpers -------------------------------------------------------

class _DuplicateKey(Exception):
    def __init__(self, key):
        self.key = key


def _no_duplicate_keys(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise _DuplicateKey(key)
        seen.add(key)
        out[key] = value
    return out


def _name_list(value, label):
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ModelFormatError(f"{label} must be a list of names")
    return list(value)
