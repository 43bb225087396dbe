"""Centrality scores on weighted directed graphs.

Works on the aggregated simple-digraph views of multi-aspect graphs
(see :func:`magpath.mag.aggregate_digraph`).  PageRank uses the
out-degree-normalized adjacency with zero rows for dangling nodes and a
per-node constant term; betweenness and closeness use unweighted
hop-count geodesics on the directed graph, so self-loops only ever
matter to PageRank.
"""

from __future__ import annotations

import json
from collections import deque
from typing import Mapping, Sequence

import numpy as np

from .mag import WeightedDigraph


def _beta_vector(g: WeightedDigraph, beta) -> np.ndarray:
    n = g.n
    if beta is None:
        return np.full(n, 1.0 / n)
    if isinstance(beta, Mapping):
        out = np.zeros(n)
        for node, value in beta.items():
            out[g.index[node]] = value
        return out
    arr = np.asarray(beta, dtype=float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValueError(f"beta must have one entry per node ({n})")
    return arr.copy()


def pagerank(g: WeightedDigraph, alpha: float = 0.85, beta=None,
             tol: float = 1e-10, max_iter: int = 1000) -> dict:
    """Fixed point of  C(i) = alpha * sum_j C(j) * Abar_ji + beta_i.

    ``Abar`` is the adjacency row-normalized by weighted out-degree;
    rows of dangling nodes stay zero, so their score mass is not
    redistributed.  ``beta`` may be a scalar, a per-node mapping, or a
    vector in node order (default 1/N).  Power iteration stops when the
    largest per-node change is at most ``tol``.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if g.n == 0:
        return {}
    b = _beta_vector(g, beta)
    if np.any(b < 0):
        raise ValueError("beta entries must be nonnegative")
    a = g.adjacency()
    k_out = a.sum(axis=1)
    abar = np.divide(a, k_out[:, None], out=np.zeros_like(a), where=k_out[:, None] > 0)
    c = b.copy()
    for _ in range(max_iter):
        nxt = alpha * (abar.T @ c) + b
        residual = float(np.max(np.abs(nxt - c)))
        c = nxt
        if residual <= tol:
            return {node: float(c[i]) for node, i in g.index.items()}
    raise RuntimeError(f"power iteration did not converge: residual {residual:.3e} "
                       f"after {max_iter} iterations")


def _bfs_distances(succ: list[list[int]], source: int, n: int) -> np.ndarray:
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in succ[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _successors(g: WeightedDigraph, keep_self_loops: bool = False) -> list[list[int]]:
    succ: list[list[int]] = [[] for _ in range(g.n)]
    for (o, t), e in g.edges.items():
        if e.weight <= 0:
            continue
        i, j = g.index[o], g.index[t]
        if i == j and not keep_self_loops:
            continue
        succ[i].append(j)
    for lst in succ:
        lst.sort()
    return succ


def betweenness(g: WeightedDigraph) -> dict:
    """Fraction of hop-count geodesics passing through each node.

    Sums, over ordered pairs (u, v) with u != v != i, the share of
    shortest u->v paths that contain i; pairs with no path contribute
    nothing.  Computed with the accumulation scheme of Brandes.
    """
    n = g.n
    succ = _successors(g)
    score = np.zeros(n)
    for s in range(n):
        sigma = np.zeros(n)
        sigma[s] = 1.0
        dist = np.full(n, -1, dtype=np.int64)
        dist[s] = 0
        preds: list[list[int]] = [[] for _ in range(n)]
        order = []
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v in succ[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
                if dist[v] == dist[u] + 1:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = np.zeros(n)
        for v in reversed(order):
            for u in preds[v]:
                delta[u] += sigma[u] / sigma[v] * (1.0 + delta[v])
            if v != s:
                score[v] += delta[v]
    return {node: float(score[i]) for node, i in g.index.items()}


def closeness_wf(g: WeightedDigraph) -> dict:
    """Reachability-scaled closeness.

    With N_i nodes reachable from i (excluding i) at hop distances
    d_ij:  C(i) = (N_i / (N-1)) * (N_i / sum d_ij), and 0 when nothing
    is reachable.  The first factor discounts nodes that only reach a
    small fragment of the graph.
    """
    n = g.n
    if n < 2:
        raise ValueError("closeness needs at least two nodes")
    succ = _successors(g)
    out = {}
    for node, i in g.index.items():
        dist = _bfs_distances(succ, i, n)
        reachable = (dist > 0)
        n_i = int(reachable.sum())
        if n_i == 0:
            out[node] = 0.0
        else:
            total = float(dist[reachable].sum())
            out[node] = (n_i / (n - 1)) * (n_i / total)
    return out


def minmax_normalize(scores: Mapping) -> dict:
    """Affine rescale of a score map onto [0, 1].

    A constant map normalizes to all ones: a uniformly scored aspect
    should keep its full weight downstream rather than vanish.
    """
    if not scores:
        raise ValueError("cannot normalize an empty score map")
    values = list(scores.values())
    lo, hi = min(values), max(values)
    if hi == lo:
        return {k: 1.0 for k in scores}
    return {k: (v - lo) / (hi - lo) for k, v in scores.items()}


def scores_to_csv(raw: Mapping, normalized: Mapping | None = None) -> str:
    """Delimited export: node id (JSON), raw score, normalized score."""
    import csv
    import io

    normalized = normalized if normalized is not None else minmax_normalize(raw)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["node", "raw", "normalized"])
    for node in sorted(raw, key=lambda nd: json.dumps(list(nd))):
        writer.writerow([json.dumps(list(node)),
                         f"{raw[node]:.17g}", f"{normalized[node]:.17g}"])
    return buf.getvalue()
