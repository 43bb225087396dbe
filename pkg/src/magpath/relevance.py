"""Node relevance: blend per-aspect centralities, then spread over context.

The base score of an activity tuple weighs the unit's PageRank (how
much the unit attracts referred patients) against a typical-event term
built from the intervention's closeness and the occupation's
betweenness.  A second PageRank pass over the full graph -- with every
edge mirrored so importance flows both up- and downstream -- lets the
position of a node in the pathways modulate that base score.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .centrality import (betweenness, closeness_wf, minmax_normalize, pagerank)
from .mag import Mag, WeightedDigraph, is_virtual


@dataclass(frozen=True)
class RelevanceParams:
    w1: float = 0.5
    w2: float = 0.5
    alpha_final: float = 0.85
    r0_scope: str = "cohort-wide"

    def __post_init__(self):
        if not 0.0 <= self.w1 <= 1.0 or not 0.0 <= self.w2 <= 1.0:
            raise ValueError("w1 and w2 must lie in [0, 1]")
        if not 0.0 <= self.alpha_final < 1.0:
            raise ValueError("alpha_final must lie in [0, 1)")
        if self.r0_scope not in ("cohort-wide", "per-cluster"):
            raise ValueError(f"unknown r0_scope: {self.r0_scope!r}")

    @classmethod
    def from_dict(cls, d: Mapping) -> "RelevanceParams":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown relevance key(s): {sorted(unknown)}")
        return cls(**dict(d))


def mining_digraph(mag: Mag, keep: Sequence[str] | None = None) -> WeightedDigraph:
    """Aggregated digraph of the (optionally projected) MAG with the
    virtual endpoint nodes left out.

    Multiplicity becomes the edge weight.  Chains are re-read from the
    stored per-patient paths so that dropping the endpoints cannot
    invent or lose transitions.
    """
    m = mag.subdetermine(keep) if keep is not None else mag
    weights: dict[tuple, float] = {}
    nodes: set[tuple] = set()
    for pid in m.patients:
        visits, _ = m.path_of(pid)
        real = [v for v in visits if not is_virtual(v)]
        nodes.update(real)
        for a, b in zip(real, real[1:]):
            weights[(a, b)] = weights.get((a, b), 0.0) + 1.0
    return WeightedDigraph.from_weights(weights, extra_nodes=nodes)


@dataclass
class CentralityBundle:
    """Normalized per-aspect scores keyed by raw aspect value."""

    closeness: Mapping[str, float]    # intervention -> score
    betweenness: Mapping[str, float]  # occupation -> score
    pagerank: Mapping[str, float]     # unit -> score
    intervention_aspect: str = "intervention"
    occupation_aspect: str = "occupation"
    unit_aspect: str = "unit"


def compute_bundle(mag: Mag,
                   intervention_aspect: str = "intervention",
                   occupation_aspect: str = "occupation",
                   unit_aspect: str = "unit",
                   pagerank_alpha: float = 0.85) -> CentralityBundle:
    """Run each aspect's centrality on its own projection of the MAG.

    Closeness for interventions, betweenness for occupations, PageRank
    for units; every map is min-max normalized.
    """
    def unwrap(scores: Mapping[tuple, float]) -> dict[str, float]:
        return {node[0]: value for node, value in scores.items()}

    g_clo = mining_digraph(mag, [intervention_aspect])
    # a projection with a single value has no distances to speak of;
    # its one node is trivially central
    clo = closeness_wf(g_clo) if g_clo.n >= 2 else {n: 1.0 for n in g_clo.nodes}
    bet = betweenness(mining_digraph(mag, [occupation_aspect]))
    pgr = pagerank(mining_digraph(mag, [unit_aspect]), alpha=pagerank_alpha)
    return CentralityBundle(
        unwrap(minmax_normalize(clo)), unwrap(minmax_normalize(bet)),
        unwrap(minmax_normalize(pgr)),
        intervention_aspect, occupation_aspect, unit_aspect)


def _component(scores: Mapping[str, float], value: str, what: str) -> float:
    try:
        return scores[value]
    except KeyError:
        raise ValueError(f"no {what} score for value {value!r}") from None


def base_relevance(node: tuple, cent: CentralityBundle, params: RelevanceParams,
                   aspects: Sequence[str]) -> float:
    """Blend the component centralities of one activity tuple.

    ``aspects`` names the positions of ``node``; any aspects beyond the
    three used here (ordinal position, diagnosis, ...) are ignored, so
    tuples sharing intervention, occupation and unit always score the
    same.
    """
    positions = {a: k for k, a in enumerate(aspects)}
    try:
        i = node[positions[cent.intervention_aspect]]
        o = node[positions[cent.occupation_aspect]]
        u = node[positions[cent.unit_aspect]]
    except KeyError as exc:
        raise ValueError(f"aspect {exc.args[0]!r} absent from {tuple(aspects)}")
    typical = params.w2 * _component(cent.closeness, i, "closeness") \
        + (1.0 - params.w2) * _component(cent.betweenness, o, "betweenness")
    return params.w1 * _component(cent.pagerank, u, "pagerank") \
        + (1.0 - params.w1) * typical


def base_relevance_map(mag: Mag, cent: CentralityBundle,
                       params: RelevanceParams) -> dict[tuple, float]:
    return {node: base_relevance(node, cent, params, mag.aspects)
            for node in sorted(mag.real_nodes, key=lambda nd: json.dumps(list(nd)))}


def propagation_graph(mag: Mag) -> WeightedDigraph:
    """Mining digraph with a same-weight reversed twin for every edge.

    Weights of coinciding directions add up, which keeps the result
    exactly symmetric even when both directions occur as real edges.
    """
    graph = mining_digraph(mag)
    sym: dict[tuple, float] = {}
    for (a, b), edge in graph.edges.items():
        sym[(a, b)] = sym.get((a, b), 0.0) + edge.weight
        sym[(b, a)] = sym.get((b, a), 0.0) + edge.weight
    return WeightedDigraph.from_weights(sym, extra_nodes=graph.nodes)


def final_relevance(mag: Mag, r0: Mapping[tuple, float], alpha_final: float,
                    tol: float = 1e-10) -> dict[tuple, float]:
    """Let context reshape the base scores.

    Every aggregated edge gets a same-weight reversed twin, so a node
    inherits importance from both the nodes it leads to and the nodes
    that lead to it; the base scores enter as the constant term of the
    PageRank.  Output is min-max normalized.
    """
    prop = propagation_graph(mag)
    missing = [n for n in prop.nodes if n not in r0]
    if missing:
        raise ValueError(f"base score missing for {len(missing)} node(s), "
                         f"first: {missing[0]}")
    beta = {n: r0[n] for n in prop.nodes}
    scores = pagerank(prop, alpha=alpha_final, beta=beta, tol=tol)
    return minmax_normalize(scores)


def relevance(mag: Mag, cent: CentralityBundle,
              params: RelevanceParams) -> dict[tuple, float]:
    """base_relevance_map + final_relevance in one call."""
    return final_relevance(mag, base_relevance_map(mag, cent, params),
                           params.alpha_final)


# -- parameter exploration -------------------------------------------


@dataclass
class SweepTable:
    """Final relevance of selected nodes across a parameter grid."""

    nodes: list[tuple]
    entries: list[dict]  # {"w1", "w2", "alpha", "scores": [per node]}

    def to_json(self) -> str:
        return json.dumps({
            "nodes": [list(n) for n in self.nodes],
            "entries": self.entries,
        }, indent=2)


def parameter_sweep(mag: Mag, cent: CentralityBundle,
                    w1_values: Sequence[float], w2_values: Sequence[float],
                    alpha_values: Sequence[float],
                    nodes: Iterable[tuple] | None = None,
                    workers: int = 1) -> SweepTable:
    """Evaluate the pipeline at every grid point.

    Grid points are independent, so they can be computed on a thread
    pool; the result order is the product order regardless of workers.
    """
    if not (w1_values and w2_values and alpha_values):
        raise ValueError("empty parameter grid")
    wanted = sorted(mag.real_nodes if nodes is None else set(nodes),
                    key=lambda nd: json.dumps(list(nd)))
    grid = list(itertools.product(w1_values, w2_values, alpha_values))

    def point(args):
        w1, w2, alpha = args
        params = RelevanceParams(w1=w1, w2=w2, alpha_final=alpha)
        scores = relevance(mag, cent, params)
        return {"w1": w1, "w2": w2, "alpha": alpha,
                "scores": [scores[n] for n in wanted]}

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(point, grid))
    else:
        entries = [point(g) for g in grid]
    return SweepTable(wanted, entries)
