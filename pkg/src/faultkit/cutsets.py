"""Cut sets, anytime minimal-cut-set enumeration, fault trees, and exact
quantitative evaluation of a top level event.

A set of faults S is a *cut set* for a top level event when some state
satisfying the event is reachable once every fault outside S is pinned
false (transitions that would activate such a fault are dropped).  Because
faults are permanent this property is monotone in S, so minimality is
well-defined and supersets of confirmed minimal cut sets can be pruned
without a reachability call.
"""

from __future__ import annotations

import itertools
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from .boolexpr import Expr, as_expr
from .errors import ExpressionError
from .model import SystemModel


@dataclass(frozen=True)
class CutSetReport:
    """Anytime snapshot after finishing one cardinality layer.

    `mcs` holds every confirmed minimal cut set of cardinality <= the
    completed layer; the guarantee field states exactly that.  When
    `exhausted` is true the snapshot is the full minimal-cut-set family.
    """

    completed_cardinality: int
    mcs: tuple[frozenset[str], ...]
    exhausted: bool

    @property
    def guarantee(self) -> str:
        return (f"all minimal cut sets of cardinality <= "
                f"{self.completed_cardinality} are included")

    @property
    def fault_free_reachable(self) -> bool:
        """True when the empty cut set is minimal: the event is reachable
        with no faults at all.  Flagged prominently in rendered reports."""
        return any(len(s) == 0 for s in self.mcs)


@dataclass(frozen=True)
class FaultTree:
    """Two-level OR-of-ANDs tree; one AND gate per minimal cut set."""

    top: str
    gates: tuple[tuple[str, ...], ...]

    def to_json(self):
        return {"top": self.top, "gates": [list(g) for g in self.gates]}


def _check_tle(m: SystemModel, tle) -> Expr:
    expr = as_expr(tle)
    unknown = expr.atoms() - m.atoms
    if unknown:
        raise ExpressionError(f"top level event references unknown atoms: {sorted(unknown)}")
    return expr


def is_cut_set(m: SystemModel, tle, faults: Iterable[str]) -> bool:
    """Reachability of the event in the model restricted to fault set S."""
    expr = _check_tle(m, tle)
    allowed = frozenset(faults)
    stray = allowed - m.fault_atoms
    if stray:
        raise ExpressionError(f"not fault atoms: {sorted(stray)}")
    fault_sets = {sid: m.fault_set(sid) for sid in m.states}
    seen = set()
    queue = deque()
    for sid in m.initial:
        if fault_sets[sid] <= allowed:
            seen.add(sid)
            queue.append(sid)
    while queue:
        sid = queue.popleft()
        if expr.evaluate(m.states[sid]):
            return True
        for nxt in m.successors(sid):
            if nxt not in seen and fault_sets[nxt] <= allowed:
                seen.add(nxt)
                queue.append(nxt)
    return False


def enumerate_minimal_sets(universe: Iterable[str],
                           is_sat: Callable[[frozenset[str]], bool],
                           jobs: int = 1) -> Iterator[tuple[int, tuple[frozenset[str], ...], bool]]:
    """Layered enumeration of minimal satisfying sets of a monotone predicate.

    Yields (completed cardinality k, minimal sets of size <= k, exhausted)
    after each layer.  Candidates containing an already-confirmed minimal
    set are skipped without calling the predicate.
    """
    items = sorted(set(universe))
    confirmed: list[frozenset[str]] = []
    for k in range(len(items) + 1):
        candidates = [frozenset(c) for c in itertools.combinations(items, k)
                      if not any(mcs <= frozenset(c) for mcs in confirmed)]
        if jobs > 1 and candidates:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(is_sat, candidates))
        else:
            results = [is_sat(c) for c in candidates]
        for cand, sat in zip(candidates, results):
            if sat:
                confirmed.append(cand)
        confirmed.sort(key=lambda s: (len(s), sorted(s)))
        yield k, tuple(confirmed), k == len(items)


def enumerate_mcs(m: SystemModel, tle, jobs: int = 1) -> Iterator[CutSetReport]:
    """Anytime minimal-cut-set enumeration, one report per cardinality layer."""
    expr = _check_tle(m, tle)
    fault_masks = _prepare_masks(m)

    def sat(S: frozenset[str]) -> bool:
        return _reach_restricted(m, expr, fault_masks, S)

    for k, confirmed, exhausted in enumerate_minimal_sets(m.fault_atoms, sat, jobs=jobs):
        yield CutSetReport(k, confirmed, exhausted)


def final_mcs(m: SystemModel, tle, jobs: int = 1) -> CutSetReport:
    report = None
    for report in enumerate_mcs(m, tle, jobs=jobs):
        pass
    return report


def _prepare_masks(m: SystemModel):
    bits = {f: 1 << i for i, f in enumerate(sorted(m.fault_atoms))}
    masks = {}
    for sid in m.states:
        mask = 0
        for f in m.fault_set(sid):
            mask |= bits[f]
        masks[sid] = mask
    return bits, masks


def _reach_restricted(m: SystemModel, expr: Expr, fault_masks, allowed: frozenset[str]) -> bool:
    bits, masks = fault_masks
    allowed_mask = 0
    for f in allowed:
        allowed_mask |= bits[f]
    seen = set()
    queue = deque()
    for sid in m.initial:
        if masks[sid] & ~allowed_mask == 0:
            seen.add(sid)
            queue.append(sid)
    while queue:
        sid = queue.popleft()
        if expr.evaluate(m.states[sid]):
            return True
        for nxt in m.successors(sid):
            if nxt not in seen and masks[nxt] & ~allowed_mask == 0:
                seen.add(nxt)
                queue.append(nxt)
    return False


# -- fault trees -----------------------------------------------------------

def build_fault_tree(mcs: Iterable[frozenset[str]], name: str) -> FaultTree:
    """OR of ANDs, one AND gate per minimal cut set, order-normalized."""
    sets = [frozenset(s) for s in mcs]
    for a in sets:
        for b in sets:
            if a != b and a <= b:
                raise ValueError(
                    f"not an antichain: {sorted(a)} is a subset of {sorted(b)}")
    gates = sorted(tuple(sorted(s)) for s in sets)
    return FaultTree(name, tuple(gates))


def export_fault_tree_dot(ft: FaultTree) -> str:
    """Deterministic DOT rendering; shapes distinguish the top event (box),
    the OR gate (diamond), AND gates (invtrapezium) and basic events
    (circle).  An empty gate list renders a single 'unreachable' node."""
    lines = ["digraph fault_tree {", "  rankdir=TB;"]
    if not ft.gates:
        lines.append(f'  "top" [label="{ft.top}: unreachable", shape=box];')
        lines.append("}")
        return "\n".join(lines) + "\n"
    lines.append(f'  "top" [label="{ft.top}", shape=box];')
    if ft.gates == ((),):
        # The empty cut set is minimal: the event needs no faults at all.
        lines.append('  "true" [label="TRUE", shape=diamond];')
        lines.append('  "top" -> "true";')
        lines.append("}")
        return "\n".join(lines) + "\n"
    lines.append('  "or" [label="OR", shape=diamond];')
    lines.append('  "top" -> "or";')
    for i, gate in enumerate(ft.gates):
        gid = f"and{i}"
        lines.append(f'  "{gid}" [label="AND", shape=invtrapezium];')
        lines.append(f'  "or" -> "{gid}";')
        for event in gate:
            eid = f"{gid}_{event}"
            lines.append(f'  "{eid}" [label="{event}", shape=circle];')
            lines.append(f'  "{gid}" -> "{eid}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def fault_tree_from_json(doc) -> FaultTree:
    if not isinstance(doc, dict) or "top" not in doc or "gates" not in doc:
        raise ValueError("fault tree document must have 'top' and 'gates'")
    gates = [frozenset(g) for g in doc["gates"]]
    return build_fault_tree(gates, doc["top"])


def mcs_to_json(mcs: Iterable[frozenset[str]]) -> list[list[str]]:
    """Canonical form: sorted fault-name lists, sorted by (size, lexicographic)."""
    return [sorted(s) for s in sorted(mcs, key=lambda s: (len(s), sorted(s)))]


def mcs_from_json(doc) -> list[frozenset[str]]:
    if not isinstance(doc, list) or not all(isinstance(g, list) for g in doc):
        raise ValueError("minimal-cut-set document must be a list of name lists")
    return [frozenset(g) for g in doc]


# -- quantitative evaluation -----------------------------------------------

def _check_probs(mcs, probabilities) -> list[str]:
    events = sorted(set().union(*mcs)) if mcs else []
    for f in events:
        if f not in probabilities:
            raise ValueError(f"missing probability for basic event {f!r}")
    for f, p in probabilities.items():
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"probability of {f!r} out of [0,1]: {p}")
    return events


def probability_by_enumeration(mcs, probabilities) -> float:
    """Sum P(world) over all fault subsets covering at least one cut set."""
    sets = [frozenset(s) for s in mcs]
    events = _check_probs(sets, probabilities)
    total = 0.0
    for occurred in itertools.chain.from_iterable(
            itertools.combinations(events, r) for r in range(len(events) + 1)):
        occ = frozenset(occurred)
        if not any(s <= occ for s in sets):
            continue
        weight = 1.0
        for f in events:
            weight *= probabilities[f] if f in occ else 1.0 - probabilities[f]
        total += weight
    return total


def probability_by_inclusion_exclusion(mcs, probabilities) -> float:
    sets = [frozenset(s) for s in mcs]
    _check_probs(sets, probabilities)
    total = 0.0
    for r in range(1, len(sets) + 1):
        for combo in itertools.combinations(sets, r):
            union = frozenset().union(*combo)
            term = 1.0
            for f in union:
                term *= probabilities[f]
            total += term if r % 2 == 1 else -term
    return total


def evaluate_probability(mcs, probabilities) -> float:
    """Probability that at least one minimal cut set fully occurs, assuming
    statistically independent basic events.  Both exact routes are computed
    and must agree; the inclusion-exclusion value is returned."""
    sets = [frozenset(s) for s in mcs]
    by_enum = probability_by_enumeration(sets, probabilities)
    by_ie = probability_by_inclusion_exclusion(sets, probabilities)
    if abs(by_enum - by_ie) > 1e-12:
        raise AssertionError(
            f"probability routes disagree: enumeration={by_enum!r}, "
            f"inclusion-exclusion={by_ie!r}")
    return by_ie
