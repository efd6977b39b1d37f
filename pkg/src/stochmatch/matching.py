"""Deterministic maximum-cardinality matching (Edmonds blossom).

The matching routine is a pure function of the edge set: the input edge ids
are sorted, adjacency lists are built in ascending neighbor order, a greedy
seed matching scans vertices in ascending id order, and augmenting searches
start from free vertices in ascending id order with a FIFO frontier.  Two
calls on the same edge set (in any input order) return identical matchings,
which is what makes per-edge matching probabilities well defined downstream.
"""

from __future__ import annotations

from collections import deque

from .graph import Matching, Realization, StochasticGraph

__all__ = ["max_matching", "mu"]


def _edge_ids(edge_set) -> list[int]:
    if isinstance(edge_set, Realization):
        return edge_set.edge_ids()
    return sorted(int(e) for e in edge_set)


def max_matching(g: StochasticGraph, edge_set=None) -> Matching:
    """Maximum-cardinality matching of the given edge subset of ``g``.

    ``edge_set`` may be a Realization, an iterable of edge ids, or None for
    the whole graph.  The empty edge set yields the empty matching.
    """
    if edge_set is None:
        ids = list(range(g.m))
    else:
        ids = _edge_ids(edge_set)
    adj = {}
    eid = {}
    for e in ids:
        u, v = g.endpoints(e)
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
        eid[(u, v)] = e
        eid[(v, u)] = e
    verts = sorted(adj)
    for v in verts:
        adj[v].sort()
    match = _blossom(verts, adj)
    out = []
    for v in verts:
        u = match.get(v, -1)
        if u >= 0 and v < u:
            out.append(eid[(v, u)])
    return Matching(g, out)


def mu(g: StochasticGraph, edge_set=None) -> int:
    """Maximum matching size of the given edge subset."""
    return len(max_matching(g, edge_set))


def _blossom(verts, adj):
    """Edmonds' algorithm on an adjacency dict; returns vertex -> partner map.

    Classic O(V^3) contraction-by-base-array formulation.  All iteration
    orders are fixed by the sorted inputs, so the result is canonical.
    """
    match = {v: -1 for v in verts}

    # Greedy seed keeps the number of augmenting searches small.
    for v in verts:
        if match[v] < 0:
            for u in adj[v]:
                if match[u] < 0:
                    match[v] = u
                    match[u] = v
                    break

    for root in verts:
        if match[root] < 0:
            _augment_from(root, verts, adj, match)
    return match


def _augment_from(root, verts, adj, match):
    parent = {v: -1 for v in verts}
    base = {v: v for v in verts}
    in_queue = {v: False for v in verts}
    in_blossom = {v: False for v in verts}

    in_queue[root] = True
    queue = deque([root])

    def find_lca(a, b):
        on_path = {v: False for v in verts}
        x = a
        while True:
            x = base[x]
            on_path[x] = True
            if match[x] < 0:
                break
            x = parent[match[x]]
        y = b
        while True:
            y = base[y]
            if on_path[y]:
                return y
            y = parent[match[y]]

    def mark_path(v, b, child):
        while base[v] != b:
            in_blossom[base[v]] = True
            in_blossom[base[match[v]]] = True
            parent[v] = child
            child = match[v]
            v = parent[match[v]]

    while queue:
        v = queue.popleft()
        for to in adj[v]:
            if base[v] == base[to] or match[v] == to:
                continue
            if to == root or (match[to] >= 0 and parent[match[to]] >= 0):
                # Odd cycle through the root of both alternating paths.
                cur_base = find_lca(v, to)
                for x in verts:
                    in_blossom[x] = False
                mark_path(v, cur_base, to)
                mark_path(to, cur_base, v)
                for x in verts:
                    if in_blossom[base[x]]:
                        base[x] = cur_base
                        if not in_queue[x]:
                            in_queue[x] = True
                            queue.append(x)
            elif parent[to] < 0:
                parent[to] = v
                if match[to] < 0:
                    _flip_path(to, parent, match)
                    return True
                in_queue[match[to]] = True
                queue.append(match[to])
    return False


def _flip_path(v, parent, match):
    while v >= 0:
        pv = parent[v]
        next_v = match[pv]
        match[v] = pv
        match[pv] = v
        v = next_v
