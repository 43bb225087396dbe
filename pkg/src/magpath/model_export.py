"""Relevance-threshold simplification and renderable model documents.

The graph handed to the UI is a simplified view of the MAG: nodes
outside a relevance band are removed (their chains re-linked, elapsed
time conserved), then an option pipeline -- project, contract,
aggregate, hide, color -- turns what is left into a lane/column grid
document that any drawing backend can consume.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .mag import Mag, aggregate_digraph, is_virtual, start_node

SEQUENCE_ASPECT = "Sequence"

#: Light-to-dark gradient used for interval color bins in exports.
EDGE_PALETTE = ("#c7e9c0", "#a1d99b", "#74c476", "#31a354", "#006d2c",
                "#00441b", "#002910")


def filter_by_relevance(mag: Mag, scores: Mapping[tuple, float],
                        min_r: float, max_r: float = math.inf) -> Mag:
    """Drop every node whose score falls outside [min_r, max_r].

    Removal re-links each patient's chain around the node and sums the
    two intervals, so the total elapsed time of every pathway is
    unchanged.  Nodes are processed in ascending score order; the end
    state does not depend on that order, it only makes logs readable.
    """
    missing = [n for n in mag.real_nodes if n not in scores]
    if missing:
        raise ValueError(f"score missing for {len(missing)} node(s), "
                         f"first: {missing[0]}")
    victims = sorted((n for n in mag.real_nodes
                      if not min_r <= scores[n] <= max_r),
                     key=lambda n: (scores[n], json.dumps(list(n))))
    if len(victims) == len(mag.real_nodes):
        raise ValueError("threshold band removes every node")
    out = mag
    for node in victims:
        out = out.remove_node(node)
    return out


@dataclass
class RenderOptions:
    """Pipeline switches for turning a MAG into a view document."""

    keep_aspects: tuple[str, ...] | None = None  # None = keep all
    lane_aspect: str = "unit"
    key_aspect: str = "intervention"
    contract_aspect: str | None = None
    contract_map: Mapping[str, str] = field(default_factory=dict)
    min_edge_patients: int = 0
    show_endpoints: bool = True
    interval_bins: int = 5

    def __post_init__(self):
        if self.interval_bins < 1:
            raise ValueError("interval_bins must be >= 1")
        if self.min_edge_patients < 0:
            raise ValueError("min_edge_patients must be >= 0")
        if self.contract_aspect is not None and not self.contract_map:
            raise ValueError("contract_aspect given without contract_map")

    @classmethod
    def from_dict(cls, d: Mapping) -> "RenderOptions":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown render option(s): {sorted(unknown)}")
        clean = dict(d)
        if clean.get("keep_aspects") is not None:
            clean["keep_aspects"] = tuple(clean["keep_aspects"])
        return cls(**clean)


@dataclass
class ModelViewDoc:
    """Grid-laid pathway model: lanes stack a category axis, columns
    follow the position ordinal."""

    lanes: list[str]
    columns: list[int]
    nodes: list[dict]
    edges: list[dict]
    legend: dict

    def node_ids(self) -> set[str]:
        return {n["id"] for n in self.nodes}

    def to_json(self) -> str:
        return json.dumps({"lanes": self.lanes, "columns": self.columns,
                           "nodes": self.nodes, "edges": self.edges,
                           "legend": self.legend}, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelViewDoc":
        d = json.loads(text)
        return cls(d["lanes"], d["columns"], d["nodes"], d["edges"], d["legend"])


def _interval_bins(means: Sequence[float], k: int) -> list[tuple[float, float]]:
    """Quantile bin boundaries over the displayed edges' mean intervals;
    collapsing duplicates, so constant data yields a single bin."""
    if not means:
        return [(0.0, 0.0)]
    qs = np.quantile(np.asarray(means, dtype=float), np.linspace(0, 1, k + 1))
    edges = [float(qs[0])]
    for q in qs[1:]:
        if float(q) > edges[-1]:
            edges.append(float(q))
    if len(edges) == 1:
        return [(edges[0], edges[0])]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def _bin_of(value: float, bins: list[tuple[float, float]]) -> int:
    for i, (lo, hi) in enumerate(bins[:-1]):
        if value < hi:
            return i
    return len(bins) - 1


def _contract_mapper(aspects: Sequence[str], aspect: str,
                     mapping: Mapping[str, str]) -> Callable[[tuple], tuple]:
    try:
        pos = list(aspects).index(aspect)
    except ValueError:
        raise ValueError(f"contract aspect {aspect!r} not in {tuple(aspects)}")

    def mapper(node: tuple) -> tuple:
        value = node[pos]
        return (*node[:pos], mapping.get(value, value), *node[pos + 1:])

    return mapper


def render_model(mag: Mag, options: RenderOptions,
                 scores: Mapping[tuple, float] | None = None) -> ModelViewDoc:
    """Run the option pipeline and lay the result on the lane/column grid.

    A pure function: the same MAG and options always produce the same
    document, byte for byte after serialization.
    """
    work = mag
    if options.keep_aspects is not None:
        work = work.subdetermine(options.keep_aspects)
    aspects = list(work.aspects)
    for label, aspect in (("lane", options.lane_aspect),
                          ("node key", options.key_aspect)):
        if aspect not in aspects:
            raise ValueError(
                f"{label} aspect {aspect!r} is not available after projection "
                f"(kept: {tuple(aspects)})")
    if options.contract_aspect is not None:
        work = work.contract_nodes(_contract_mapper(
            aspects, options.contract_aspect, options.contract_map))

    lane_pos = aspects.index(options.lane_aspect)
    key_pos = aspects.index(options.key_aspect)
    seq_pos = aspects.index(SEQUENCE_ASPECT) if SEQUENCE_ASPECT in aspects else None

    graph = aggregate_digraph(work)
    shown = [e for e in graph.edges.values()
             if e.distinct_patients >= options.min_edge_patients]
    if not options.show_endpoints:
        shown = [e for e in shown
                 if not (is_virtual(e.origin) or is_virtual(e.target))]

    node_set = set()
    for e in shown:
        node_set.update((e.origin, e.target))
    for n in work.nodes:  # hiding edges must not drop real nodes
        if options.show_endpoints or not is_virtual(n):
            node_set.add(n)

    real = sorted(n for n in node_set if not is_virtual(n))
    max_col = 0
    if seq_pos is not None:
        ordinals = [int(n[seq_pos]) for n in real]
        max_col = max(ordinals, default=0)

    def column(n: tuple) -> int:
        if is_virtual(n):
            return 0 if n == start_node(len(aspects)) else max_col + 1
        return int(n[seq_pos]) if seq_pos is not None else 0

    def node_id(n: tuple) -> str:
        return json.dumps(list(n))

    nodes = []
    for n in sorted(node_set, key=node_id):
        virtual = is_virtual(n)
        label = ("start" if n == start_node(len(aspects)) else "end") if virtual \
            else str(n[key_pos])
        nodes.append({
            "id": node_id(n),
            "lane": "" if virtual else str(n[lane_pos]),
            "column": column(n),
            "key": "" if virtual else str(n[key_pos]),
            "label": label,
            "relevance": (None if virtual or scores is None
                          else scores.get(n)),
            "virtual": virtual,
        })

    # endpoint-wrapping edges carry placeholder zero intervals; they must
    # not stretch the color scale of the real waiting times
    means = [sum(e.intervals) / len(e.intervals) for e in shown
             if e.intervals and not (is_virtual(e.origin) or is_virtual(e.target))]
    bins = _interval_bins(means, options.interval_bins)
    edges = []
    for e in sorted(shown, key=lambda e: (node_id(e.origin), node_id(e.target))):
        iv = e.intervals or (0.0,)
        mean = sum(iv) / len(iv)
        virtual = is_virtual(e.origin) or is_virtual(e.target)
        edges.append({
            "src": node_id(e.origin),
            "dst": node_id(e.target),
            "frequency": int(e.weight),
            "patients": e.distinct_patients,
            "interval": {"min": min(iv), "mean": mean, "max": max(iv)},
            "color_bin": 0 if virtual else _bin_of(mean, bins),
        })

    lanes = sorted({n["lane"] for n in nodes if not n["virtual"]})
    columns = sorted({n["column"] for n in nodes})
    legend = {
        "lane_aspect": options.lane_aspect,
        "key_aspect": options.key_aspect,
        "keys": sorted({n["key"] for n in nodes if not n["virtual"]}),
        "interval_bins": [[lo, hi] for lo, hi in bins],
    }
    return ModelViewDoc(lanes, columns, nodes, edges, legend)


def export_dot(doc: ModelViewDoc, sink) -> None:
    """Write the document as a graph-description (DOT) file.

    Lanes become clusters, interval bins become edge colors from a
    fixed palette; all sections are sorted so re-exporting the same
    document is byte-identical.
    """
    out = io.StringIO()
    out.write("digraph pathway_model {\n")
    out.write("  rankdir=LR;\n  node [style=filled, fillcolor=white];\n")
    by_lane: dict[str, list[dict]] = {}
    for n in doc.nodes:
        by_lane.setdefault(n["lane"], []).append(n)
    for k, lane in enumerate(sorted(by_lane)):
        members = sorted(by_lane[lane], key=lambda n: n["id"])
        if lane == "":
            for n in members:
                out.write(f'  {json.dumps(n["id"])} '
                          f'[label={json.dumps(n["label"])}, shape=circle];\n')
            continue
        out.write(f"  subgraph cluster_{k} {{\n")
        out.write(f"    label={json.dumps(lane)};\n")
        for n in members:
            rel = "" if n["relevance"] is None else f' ({n["relevance"]:.2f})'
            out.write(f'    {json.dumps(n["id"])} '
                      f'[label={json.dumps(n["label"] + rel)}];\n')
        out.write("  }\n")
    for e in doc.edges:
        color = EDGE_PALETTE[e["color_bin"] % len(EDGE_PALETTE)]
        out.write(f'  {json.dumps(e["src"])} -> {json.dumps(e["dst"])} '
                  f'[label="{e["frequency"]}", color="{color}", '
                  f'penwidth={1 + math.log1p(e["frequency"]):.2f}];\n')
    out.write("}\n")
    text = out.getvalue()
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8") as fh:
            fh.write(text)
