"""Max-flow / min-cut on small directed graphs with fractional capacities."""

from __future__ import annotations

from collections import deque

import numpy as np


class DisconnectedError(ValueError):
    """The sink cannot be reached from the source through usable edges."""


def max_flow_min_cut(capacity: dict, source, sink, eps: float = 0.0):
    """Edmonds-Karp on ``{(tail, head): capacity}``.

    Returns ``(value, cut_edges)`` where ``cut_edges`` are the saturated
    edges leaving the set of nodes reachable from ``source`` in the final
    residual graph (the source-minimal minimum cut).
    """
    adj: dict = {}
    res: dict = {}
    for (a, b), c in capacity.items():
        if a == b:
            continue
        c = max(float(c), 0.0)
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
        res[(a, b)] = res.get((a, b), 0.0) + c
        res.setdefault((b, a), 0.0)
    for k in adj:
        adj[k] = list(dict.fromkeys(adj[k]))
    if source not in adj or sink not in adj:
        return 0.0, []

    value = 0.0
    while True:
        prev = {source: None}
        q = deque([source])
        while q and sink not in prev:
            a = q.popleft()
            for b in adj[a]:
                if b not in prev and res[(a, b)] > eps:
                    prev[b] = a
                    q.append(b)
        if sink not in prev:
            break
        path = []
        b = sink
        while prev[b] is not None:
            path.append((prev[b], b))
            b = prev[b]
        push = min(res[e] for e in path)
        for a, b in path:
            res[(a, b)] -= push
            res[(b, a)] += push
        value += push

    reach = set(prev)
    cut = [e for e, c in capacity.items()
           if e[0] in reach and e[1] not in reach and e[0] != e[1]]
    return value, cut


def min_weight_cut(edges, source, sink, weights) -> tuple[list, float]:
    """Minimum-weight edge set separating ``source`` from ``sink``.

    ``edges`` is an iterable of ``(tail, head)`` pairs and ``weights`` maps
    each edge to its current weight (missing or non-positive entries are
    unusable).  Raises :class:`DisconnectedError` when no positive-weight
    path exists at all.
    """
    cap = {e: max(float(weights.get(e, 0.0)), 0.0) for e in edges}
    usable = {e for e, c in cap.items() if c > 0}
    # reachability over positive edges decides "disconnected"
    seen, q = {source}, deque([source])
    while q:
        a = q.popleft()
        for (t, h) in usable:
            if t == a and h not in seen:
                seen.add(h)
                q.append(h)
    if sink not in seen:
        raise DisconnectedError(f"{sink!r} unreachable from {source!r}")
    value, cut = max_flow_min_cut(cap, source, sink)
    return cut, value


def layered_min_cut(src_cap: np.ndarray, user_cap: np.ndarray):
    """Min cut for parallel two-edge paths ``S -> m -> u``.

    For this shape every path is independent, so the max flow is
    ``sum_m min(src_cap[m], user_cap[m])`` and the cut takes, per AP, the
    source edge when ``src_cap <= user_cap`` and the user edge otherwise.
    That is the same cut :func:`max_flow_min_cut` returns.

    Returns ``(value, src_in_cut, user_in_cut)`` with boolean masks.
    """
    src_in = src_cap <= user_cap
    value = float(np.where(src_in, src_cap, user_cap).sum())
    return value, src_in, ~src_in
