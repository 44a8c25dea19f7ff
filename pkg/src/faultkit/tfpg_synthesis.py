"""TFPG synthesis from a reference system model.

For each declared discrepancy the minimal cause sets of its predicate are
computed over a candidate cause universe holding the declared fault atoms
and the other discrepancies; a cause discrepancy is treated as a latched
pseudo-event, so excluding it from a candidate set forbids every state
satisfying its predicate.  Singleton cause sets become direct OR edges;
larger ones become helper AND nodes (or the discrepancy itself when it was
declared AND with a single multi-cause set).  Static simplification then
merges duplicate AND nodes, drops mode-subsumed parallel edges, and
transitively reduces OR edges whose delay interval covers the composed
path interval; the reduction step is kept only when a behavioral re-check
still passes, so the output is complete with respect to the model at the
synthesis horizon by construction.  Finally the edge bounds are tightened.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .boolexpr import Expr, as_expr
from .cutsets import enumerate_minimal_sets
from .errors import ModelFormatError
from .model import SystemModel
from .tfpg import (AND, FM, INF, OR, NodeMap, Tfpg, TfpgEdge, TfpgError,
                   behavioral_validate, tighten_edges)


@dataclass(frozen=True)
class DiscrepancyDecl:
    name: str
    expr: Expr
    kind: str  # OR or AND intent

    def __post_init__(self):
        if self.kind not in (OR, AND):
            raise ValueError(f"discrepancy {self.name!r}: kind must be OR or AND")


@dataclass
class SynthesisConfig:
    fm_atoms: list[str]
    discrepancies: list[DiscrepancyDecl]
    mode_map: dict[str, str]  # TFPG mode -> mode atom

    @staticmethod
    def from_json(doc) -> "SynthesisConfig":
        if not isinstance(doc, dict) or "fm" not in doc or "discrepancies" not in doc:
            raise ModelFormatError("synthesis config needs 'fm' and 'discrepancies'")
        decls = []
        for name, item in doc["discrepancies"].items():
            decls.append(DiscrepancyDecl(name, as_expr(item["expr"]),
                                         item.get("kind", OR)))
        return SynthesisConfig(list(doc["fm"]), decls, dict(doc.get("modes", {})))


def load_synthesis_config(path) -> SynthesisConfig:
    with open(path, encoding="utf-8") as fh:
        return SynthesisConfig.from_json(json.load(fh))


@dataclass
class SynthesisResult:
    tfpg: Tfpg
    node_map: NodeMap
    findings: tuple[str, ...]


def synthesize_tfpg(m: SystemModel, config: SynthesisConfig,
                    horizon: int) -> SynthesisResult:
    _check_config(m, config)
    findings: list[str] = []
    decls = {d.name: d for d in config.discrepancies}
    kept = _reachability_filter(m, config, findings)
    families = _cause_families(m, config, kept, findings)
    modes = tuple(sorted(config.mode_map)) if config.mode_map else ("nominal",)

    nodes: dict[str, str] = {atom: FM for atom in config.fm_atoms}
    edges: list[TfpgEdge] = []
    all_modes = tuple(sorted(modes))
    for name in sorted(families):
        family = sorted(families[name], key=lambda s: (len(s), sorted(s)))
        decl = decls[name]
        if decl.kind == AND and len(family) == 1 and len(family[0]) >= 2:
            nodes[name] = AND
            for cause in sorted(family[0]):
                edges.append(TfpgEdge(cause, name, 0, INF, all_modes))
            continue
        nodes[name] = OR
        helper_index = 0
        for causes in family:
            members = sorted(causes)
            if len(members) == 1:
                edges.append(TfpgEdge(members[0], name, 0, INF, all_modes))
            else:
                helper = f"{name}_and{helper_index}"
                helper_index += 1
                if helper in nodes or helper in decls:
                    raise TfpgError(f"helper node name {helper!r} collides "
                                    f"with a declared node")
                nodes[helper] = AND
                for cause in members:
                    edges.append(TfpgEdge(cause, helper, 0, INF, all_modes))
                edges.append(TfpgEdge(helper, name, 0, INF, all_modes))

    node_map = NodeMap(
        exprs={**{atom: as_expr(atom) for atom in config.fm_atoms},
               **{name: decls[name].expr for name in families}},
        mode_map=dict(config.mode_map))

    g = Tfpg(modes, nodes, edges)
    g = _merge_duplicate_ands(g, node_map)
    g = _drop_mode_subsumed(g)
    g = _reduce_or_edges(g, m, node_map, horizon)
    tightened = tighten_edges(g, m, node_map, horizon)
    result = behavioral_validate(tightened.tfpg, m, node_map, horizon)
    if not result.complete:
        raise TfpgError("synthesized TFPG failed behavioral validation; "
                        "this is a bug: " + "; ".join(str(v) for v in result.violations))
    return SynthesisResult(tightened.tfpg, node_map, tuple(findings))


def _check_config(m: SystemModel, config: SynthesisConfig) -> None:
    for atom in config.fm_atoms:
        if atom not in m.fault_atoms:
            raise TfpgError(f"{atom!r} is not a fault atom of the model")
    names = [d.name for d in config.discrepancies]
    if len(set(names)) != len(names):
        raise TfpgError("discrepancy names must be unique")
    clash = set(names) & set(config.fm_atoms)
    if clash:
        raise TfpgError(f"discrepancy names clash with fault atoms: {sorted(clash)}")
    for d in config.discrepancies:
        unknown = d.expr.atoms() - m.atoms
        if unknown:
            raise TfpgError(f"discrepancy {d.name!r} references unknown atoms "
                            f"{sorted(unknown)}")
    if m.mode_atoms:
        if set(config.mode_map.values()) != set(m.mode_atoms) or \
                len(set(config.mode_map.values())) != len(config.mode_map):
            raise TfpgError("mode map must be a bijection onto the model's mode atoms")
    elif config.mode_map:
        raise TfpgError("model declares no mode atoms; mode map must be empty")


def _reachable_with(m: SystemModel, allowed_faults: frozenset[str],
                    excluded: list[Expr], target: Expr) -> bool:
    """Reachability of the target predicate with faults restricted to the
    allowed set and every excluded pseudo-event forbidden to ever occur."""
    def ok(sid):
        if not m.fault_set(sid) <= allowed_faults:
            return False
        return not any(m.holds(e, sid) for e in excluded)

    seen = set()
    queue = deque(sid for sid in m.initial if ok(sid))
    seen.update(queue)
    while queue:
        sid = queue.popleft()
        if m.holds(target, sid):
            return True
        for nxt in m.successors(sid):
            if nxt not in seen and ok(nxt):
                seen.add(nxt)
                queue.append(nxt)
    return False


def _reachability_filter(m, config, findings) -> list[str]:
    kept = []
    all_faults = frozenset(config.fm_atoms)
    for d in config.discrepancies:
        if not _reachable_with(m, all_faults, [], d.expr):
            findings.append(f"{d.name}: predicate unreachable even with all "
                            f"declared faults; excluded")
        elif _reachable_with(m, frozenset(), [], d.expr):
            findings.append(f"{d.name}: predicate reachable without any fault; "
                            f"excluded")
        else:
            kept.append(d.name)
    return kept


def _cause_families(m, config, kept, findings) -> dict[str, list[frozenset[str]]]:
    decls = {d.name: d for d in config.discrepancies}
    fm_set = frozenset(config.fm_atoms)

    def family_over(name: str, cause_discs: list[str]) -> list[frozenset[str]]:
        universe = sorted(fm_set) + sorted(cause_discs)

        def sat(S: frozenset[str]) -> bool:
            allowed = S & fm_set
            excluded = [decls[c].expr for c in cause_discs if c not in S]
            return _reachable_with(m, allowed, excluded, decls[name].expr)

        final = None
        for _, confirmed, exhausted in enumerate_minimal_sets(universe, sat):
            if exhausted:
                final = list(confirmed)
        return final

    families = {name: family_over(name, [c for c in kept if c != name])
                for name in kept}
    cyclic = _cyclic_discrepancies(families)
    for name in sorted(cyclic):
        findings.append(f"{name}: involved in a cause cycle; recomputed over "
                        f"fault causes only")
        families[name] = family_over(name, [])
    return families


def _cyclic_discrepancies(families) -> set[str]:
    succ = {name: {c for S in family for c in S if c in families}
            for name, family in families.items()}
    cyclic = set()
    for name in families:
        seen = set()
        frontier = set(succ[name])
        while frontier:
            if name in frontier:
                cyclic.add(name)
                break
            seen |= frontier
            frontier = {t for s in frontier for t in succ[s]} - seen
    return cyclic


# -- static simplification ------------------------------------------------------

def _merge_duplicate_ands(g: Tfpg, nm: NodeMap) -> Tfpg:
    """Merge unmapped AND nodes that have the same source set and target."""
    helpers = [n for n, k in g.nodes.items() if k == AND and n not in nm.exprs]
    signature = {}
    replace = {}
    for node in sorted(helpers):
        sources = frozenset(g.edges[i].src for i in g.incoming(node))
        targets = frozenset(e.dst for e in g.edges if e.src == node)
        key = (sources, targets)
        if key in signature:
            replace[node] = signature[key]
        else:
            signature[key] = node
    if not replace:
        return g
    nodes = {n: k for n, k in g.nodes.items() if n not in replace}
    edges = []
    for e in g.edges:
        src = replace.get(e.src, e.src)
        dst = replace.get(e.dst, e.dst)
        edges.append(TfpgEdge(src, dst, e.tmin, e.tmax, e.modes))
    return Tfpg(g.modes, nodes, sorted(set(edges), key=lambda e: (e.src, e.dst)))


def _drop_mode_subsumed(g: Tfpg) -> Tfpg:
    """Drop an edge when a parallel edge with the same endpoints and delay
    interval carries a superset of its mode labels."""
    keep = []
    for i, e in enumerate(g.edges):
        subsumed = False
        for j, other in enumerate(g.edges):
            if i == j or (e.src, e.dst, e.tmin, e.tmax) != \
                    (other.src, other.dst, other.tmin, other.tmax):
                continue
            if set(e.modes) < set(other.modes) or \
                    (e.modes == other.modes and j < i):
                subsumed = True
                break
        if not subsumed:
            keep.append(e)
    return Tfpg(g.modes, g.nodes, keep)


def _reduce_or_edges(g: Tfpg, m: SystemModel, nm: NodeMap, horizon: int) -> Tfpg:
    """Transitive reduction among OR edges: remove a direct edge u->w when a
    two-edge path u->v->w through an OR node exists and the direct delay
    interval contains the composed one.  Each removal is kept only if the
    graph still validates behaviorally."""
    current = g
    rejected: set[TfpgEdge] = set()
    while True:
        removal = _find_reducible(current, rejected)
        if removal is None:
            return current
        edges = [e for i, e in enumerate(current.edges) if i != removal]
        candidate = Tfpg(current.modes, current.nodes, edges)
        if behavioral_validate(candidate, m, nm, horizon).complete:
            current = candidate
        else:
            rejected.add(current.edges[removal])


def _find_reducible(g: Tfpg, rejected: set[TfpgEdge]) -> int | None:
    for i, direct in enumerate(g.edges):
        if g.nodes[direct.dst] != OR or direct in rejected:
            continue
        for first in g.edges:
            if first.src != direct.src or g.nodes.get(first.dst) != OR \
                    or first.dst == direct.dst:
                continue
            for j in g.incoming(direct.dst):
                second = g.edges[j]
                if second.src != first.dst:
                    continue
                lo = first.tmin + second.tmin
                hi = first.tmax + second.tmax
                if direct.tmin <= lo and direct.tmax >= hi:
                    return i
    return None
