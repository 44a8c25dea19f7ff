"""Deterministic graph search helpers over implicit graphs.

Nodes must be hashable and mutually comparable; roots and successors are
explored in sorted order so that every returned witness is reproducible.
"""

from __future__ import annotations

from typing import Callable, Iterable


def find_reachable_cycle(roots: Iterable, successors: Callable):
    """Find a cycle reachable from the given roots.

    Returns (stem, loop) where stem is the node path from a root up to and
    including the loop entry, and loop is the cycle starting and ending at
    that entry (entry repeated at the end).  Returns None when the
    reachable subgraph is acyclic.  Three-color iterative DFS.
    """
    colors: dict = {}
    for root in sorted(set(roots)):
        if colors.get(root) == "done":
            continue
        path = [root]
        iters = [iter(sorted(set(successors(root))))]
        colors[root] = "active"
        index = {root: 0}
        while path:
            try:
                nxt = next(iters[-1])
            except StopIteration:
                dead = path.pop()
                iters.pop()
                colors[dead] = "done"
                del index[dead]
                continue
            state = colors.get(nxt)
            if state == "active":
                entry = index[nxt]
                return path[: entry + 1], path[entry:] + [nxt]
            if state == "done":
                continue
            colors[nxt] = "active"
            index[nxt] = len(path)
            path.append(nxt)
            iters.append(iter(sorted(set(successors(nxt)))))
    return None


def lexleast_shortest_paths(roots: Iterable, successors: Callable):
    """BFS computing, for every reachable node, the lexicographically least
    among its shortest paths (as a node tuple from a root).

    Frontier entries are processed in path order per layer, so the first
    claim on a node is the least path of minimal length.
    """
    paths: dict = {}
    layer = sorted({(root,) for root in roots})
    for p in layer:
        node = p[-1]
        if node not in paths:
            paths[node] = p
    layer = [paths[node] for node in sorted({p[-1] for p in layer})]
    while layer:
        next_paths = []
        for path in sorted(layer):
            for nxt in sorted(set(successors(path[-1]))):
                if nxt not in paths:
                    candidate = path + (nxt,)
                    paths[nxt] = candidate
                    next_paths.append(candidate)
        layer = next_paths
    return paths
