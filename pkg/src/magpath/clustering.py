"""Pathway clustering: dendrogram validation, similarity graphs, and
overlapping community detection.

The dissimilarity matrix is not a metric, so hard hierarchical
clustering is validated (via the cophenetic correlation) rather than
trusted; the production route turns the matrix into a similarity graph
and finds overlapping communities with a local seed-expansion detector.
Files in the external community-detection tool's edge-list/module
format can be exchanged for cross-checking.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .dissimilarity import DissimilarityMatrix
from .eventlog import EventLog

# -- hierarchical clustering (average linkage) -----------------------


@dataclass
class Dendrogram:
    """Agglomerative merge tree.

    ``merges[k] = (left, right, height, size)`` creates cluster
    ``n + k`` from clusters ``left`` and ``right``; ids below ``n`` are
    leaves.
    """

    n: int
    merges: list[tuple[int, int, float, int]]

    def cophenetic_matrix(self) -> np.ndarray:
        """Pairwise merge heights: the distance at which two leaves
        first end up in the same cluster."""
        coph = np.zeros((self.n, self.n))
        members: dict[int, list[int]] = {i: [i] for i in range(self.n)}
        for k, (a, b, height, _size) in enumerate(self.merges):
            for i in members[a]:
                for j in members[b]:
                    coph[i, j] = coph[j, i] = height
            members[self.n + k] = members.pop(a) + members.pop(b)
        return coph


def average_linkage_dendrogram(matrix: DissimilarityMatrix | np.ndarray) -> Dendrogram:
    """Agglomerative clustering with average linkage.

    Inter-cluster distance is the mean of all cross pairs, maintained
    with the Lance-Williams update.  Ties pick the lexicographically
    lowest active index pair, so the tree is deterministic.
    """
    d = matrix.values if isinstance(matrix, DissimilarityMatrix) else matrix
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(d, d.T) or not np.all(np.diag(d) == 0.0):
        raise ValueError("matrix must be symmetric with a zero diagonal")
    if n == 1:
        return Dendrogram(1, [])
    work = d.copy()
    size = {i: 1 for i in range(n)}
    alias = {i: i for i in range(n)}  # row index -> current cluster id
    active = sorted(alias)
    merges = []
    for step in range(n - 1):
        best = None
        for ai, i in enumerate(active):
            row = work[i]
            for j in active[ai + 1:]:
                if best is None or row[j] < best[0]:
                    best = (row[j], i, j)
        height, i, j = best
        a, b = alias[i], alias[j]
        merges.append((a, b, float(height), size[a] + size[b]))
        # Lance-Williams average-linkage update into row/col i
        ni, nj = size[a], size[b]
        for k in active:
            if k in (i, j):
                continue
            work[i, k] = work[k, i] = (ni * work[i, k] + nj * work[j, k]) / (ni + nj)
        alias[i] = n + step
        size[n + step] = ni + nj
        active.remove(j)
    return Dendrogram(n, merges)


def cophenetic_correlation(matrix: DissimilarityMatrix | np.ndarray,
                           dendrogram: Dendrogram) -> float:
    """Pearson correlation between original and dendrogram-implied
    distances over the strict upper triangle."""
    d = matrix.values if isinstance(matrix, DissimilarityMatrix) else np.asarray(matrix)
    coph = dendrogram.cophenetic_matrix()
    iu = np.triu_indices(d.shape[0], k=1)
    x, y = d[iu], coph[iu]
    if x.size < 2 or np.std(x) == 0.0 or np.std(y) == 0.0:
        raise ValueError("degenerate input: constant distances have no "
                         "cophenetic correlation")
    return float(np.corrcoef(x, y)[0, 1])


@dataclass
class SampledCCC:
    mean: float
    std: float
    values: tuple[float, ...]


def sampled_ccc(matrix: DissimilarityMatrix | np.ndarray, sample_size: int,
                repetitions: int = 25, seed: int = 0) -> SampledCCC:
    """Cophenetic correlation over random principal submatrices."""
    d = matrix.values if isinstance(matrix, DissimilarityMatrix) else np.asarray(matrix)
    n = d.shape[0]
    if sample_size > n:
        raise ValueError(f"sample_size {sample_size} exceeds matrix dimension {n}")
    rng = random.Random(seed)
    values = []
    for _ in range(repetitions):
        idx = sorted(rng.sample(range(n), sample_size))
        sub = d[np.ix_(idx, idx)]
        values.append(cophenetic_correlation(sub, average_linkage_dendrogram(sub)))
    arr = np.array(values)
    return SampledCCC(float(arr.mean()), float(arr.std()), tuple(values))


# -- similarity graph ------------------------------------------------


class WeightedGraph:
    """Undirected weighted graph over case ids; no self-loops."""

    def __init__(self, nodes: Sequence[str], weights: Mapping[tuple[str, str], float]):
        self.nodes: tuple[str, ...] = tuple(nodes)
        self._adj: dict[str, dict[str, float]] = {v: {} for v in self.nodes}
        for (u, v), w in weights.items():
            if u == v:
                raise ValueError(f"self-loop on {u!r}")
            if w <= 0:
                raise ValueError(f"nonpositive weight on ({u!r}, {v!r})")
            self._adj[u][v] = w
            self._adj[v][u] = w

    @property
    def n(self) -> int:
        return len(self.nodes)

    def neighbors(self, v: str) -> dict[str, float]:
        return self._adj[v]

    def strength(self, v: str) -> float:
        return sum(self._adj[v].values())

    def total_strength(self) -> float:
        return sum(self.strength(v) for v in self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(nb) for nb in self._adj.values()) // 2

    def edge_list(self) -> list[tuple[str, str, float]]:
        out = []
        for u in self.nodes:
            for v, w in self._adj[u].items():
                if u < v:
                    out.append((u, v, w))
        return sorted(out)


def similarity_graph(matrix: DissimilarityMatrix) -> WeightedGraph:
    """Complement the normalized dissimilarities into edge weights.

    weight(i, j) = 1 - d(i, j); pairs at the maximum distance 1 get no
    edge at all, so every edge has positive weight.
    """
    d = matrix.values
    if np.any(d > 1.0 + 1e-12):
        raise ValueError("matrix is not normalized: found distance > 1")
    weights = {}
    n = len(matrix.ids)
    for i in range(n):
        for j in range(i + 1, n):
            w = 1.0 - d[i, j]
            if w > 0.0:
                weights[(matrix.ids[i], matrix.ids[j])] = w
    return WeightedGraph(matrix.ids, weights)


# -- overlapping community detection ---------------------------------


@dataclass
class ClusterSet:
    """Overlapping communities plus unassigned ("homeless") cases."""

    clusters: list[frozenset[str]]
    singletons: frozenset[str]
    quality: list[float] = field(default_factory=list)
    seed: int = 0

    def membership(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for k, members in enumerate(self.clusters):
            for case in members:
                out.setdefault(case, []).append(k)
        return out

    def to_json(self) -> str:
        obj = {"clusters": [sorted(c) for c in self.clusters],
               "singletons": sorted(self.singletons),
               "quality": self.quality, "seed": self.seed}
        return json.dumps(obj, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ClusterSet":
        obj = json.loads(text)
        return cls([frozenset(c) for c in obj["clusters"]],
                   frozenset(obj["singletons"]),
                   list(obj.get("quality", [])), int(obj.get("seed", 0)))


def _inclusion_p(graph: WeightedGraph, node: str, community: set[str],
                 s_comm: float, s_tot: float) -> float:
    """Probability, under a degree-preserving null (normal
    approximation), of the node being at least this strongly connected
    to the community."""
    w = sum(wt for nb, wt in graph.neighbors(node).items() if nb in community)
    s_v = graph.strength(node)
    if s_tot <= 0:
        return 1.0
    mu = s_v * s_comm / s_tot
    var = mu * max(1.0 - s_comm / s_tot, 0.0)
    if var <= 1e-18:
        return 0.0 if w > mu else 1.0
    z = (w - mu) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _grow_prune(graph: WeightedGraph, seed_node: str, alpha: float,
                s_tot: float, max_cycles: int = 100) -> set[str] | None:
    community = {seed_node}
    seen_states: set[frozenset] = set()
    for _ in range(max_cycles):
        state = frozenset(community)
        if state in seen_states:
            break
        seen_states.add(state)
        changed = False
        # grow: repeatedly admit the most significant boundary node
        while True:
            s_comm = sum(graph.strength(v) for v in community)
            boundary = sorted({nb for v in community for nb in graph.neighbors(v)}
                              - community)
            best = None
            for cand in boundary:
                p = _inclusion_p(graph, cand, community, s_comm, s_tot)
                if p < alpha and (best is None or p < best[0]):
                    best = (p, cand)
            if best is None:
                break
            community.add(best[1])
            changed = True
        # prune: drop members that are insignificant against the rest
        while len(community) > 1:
            worst = None
            for member in sorted(community):
                rest = community - {member}
                s_rest = sum(graph.strength(v) for v in rest)
                p = _inclusion_p(graph, member, rest, s_rest, s_tot)
                if p > alpha and (worst is None or p > worst[0]):
                    worst = (p, member)
            if worst is None:
                break
            community.discard(worst[1])
            changed = True
        if not changed:
            break
    if len(community) < 2:
        return None
    return community


def _jaccard(a: frozenset, b: frozenset) -> float:
    return len(a & b) / len(a | b)


def detect_overlapping_communities(graph: WeightedGraph, runs: int = 25,
                                   seeds: int | Sequence[int] = 5,
                                   alpha: float = 0.5,
                                   dedupe_overlap: float = 0.6) -> ClusterSet:
    """Local seed-expansion detection of overlapping communities.

    Each run grows a community from a random seed node by repeatedly
    admitting the boundary node with the lowest inclusion probability
    under a degree-preserving null, then pruning members that fall
    below significance, iterating to a fixed point.  ``runs`` seeds are
    tried per restart; near-duplicate communities (Jaccard overlap
    above ``dedupe_overlap``) are merged, keeping the more significant
    one.  Among restarts the ClusterSet with the lowest mean
    significance wins, so results are deterministic for a given seed
    list.  Nodes in no surviving community are singletons.
    """
    if graph.n == 0:
        raise ValueError("empty graph")
    seed_list = list(range(seeds)) if isinstance(seeds, int) else list(seeds)
    if not seed_list:
        raise ValueError("need at least one restart seed")
    s_tot = graph.total_strength()
    best: tuple[float, int, ClusterSet] | None = None
    for restart_index, restart_seed in enumerate(seed_list):
        rng = random.Random(restart_seed)
        found: list[tuple[float, frozenset[str]]] = []
        for _ in range(runs):
            seed_node = rng.choice(graph.nodes)
            community = _grow_prune(graph, seed_node, alpha, s_tot)
            if community is None:
                continue
            score = float(np.mean([
                _inclusion_p(graph, v, community - {v},
                             sum(graph.strength(u) for u in community - {v}), s_tot)
                for v in community]))
            found.append((score, frozenset(community)))
        found.sort(key=lambda sc: (sc[0], -len(sc[1]), sorted(sc[1])))
        kept: list[tuple[float, frozenset[str]]] = []
        for score, community in found:
            if all(_jaccard(community, other) < dedupe_overlap for _, other in kept):
                kept.append((score, community))
        clusters = [c for _, c in kept]
        assigned = set().union(*clusters) if clusters else set()
        result = ClusterSet(clusters,
                            frozenset(graph.nodes) - assigned,
                            [s for s, _ in kept], seed=restart_seed)
        mean_quality = float(np.mean(result.quality)) if result.quality else math.inf
        key = (mean_quality, restart_index)
        if best is None or key < best[:2]:
            best = (mean_quality, restart_index, result)
    return best[2]


# -- external tool interop -------------------------------------------


def export_oslom_edgelist(graph: WeightedGraph, sink: str | Path | IO[str]) -> dict[int, str]:
    """Write the graph as whitespace-separated ``src dst weight`` lines.

    Node ids become consecutive integers starting at 1; the returned
    mapping (int -> original id) is what :func:`import_oslom_partition`
    needs to translate module files back.
    """
    mapping = {k + 1: v for k, v in enumerate(graph.nodes)}
    reverse = {v: k for k, v in mapping.items()}
    lines = [f"{reverse[u]} {reverse[v]} {w:g}" for u, v, w in graph.edge_list()]
    text = "\n".join(lines) + ("\n" if lines else "")
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text)
    else:
        sink.write(text)
    return mapping


def import_oslom_partition(source: str | Path | IO[str], mapping: Mapping[int, str],
                           all_nodes: Iterable[str] | None = None) -> ClusterSet:
    """Parse a module file (one community per line of integer ids;
    ``#`` lines are comments) back into a ClusterSet."""
    if isinstance(source, (str, Path)) and Path(source).exists():
        text = Path(source).read_text()
    elif hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
    clusters = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        members = set()
        for token in line.split():
            try:
                ident = int(token)
            except ValueError:
                raise ValueError(f"line {line_no}: non-integer id {token!r}") from None
            if ident not in mapping:
                raise ValueError(f"line {line_no}: unknown node id {ident}")
            members.add(mapping[ident])
        if members:
            clusters.append(frozenset(members))
    universe = set(all_nodes) if all_nodes is not None else set(mapping.values())
    assigned = set().union(*clusters) if clusters else set()
    return ClusterSet(clusters, frozenset(universe - assigned))


# -- cluster profiles ------------------------------------------------


@dataclass
class ClusterProfile:
    label: str
    n_patients: int
    mean_length: float
    std_length: float
    pair_frequency: dict[tuple[str, str], float]

    def top_pairs(self, k: int = 10) -> list[tuple[tuple[str, str], float]]:
        return sorted(self.pair_frequency.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


@dataclass
class ProfileTable:
    profiles: list[ClusterProfile]
    n_singletons: int

    def to_csv(self, k: int = 10) -> str:
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cluster", "patients", "mean_length", "std_length",
                         "pair", "frequency"])
        for prof in self.profiles:
            for (a, b), freq in prof.top_pairs(k):
                writer.writerow([prof.label, prof.n_patients,
                                 f"{prof.mean_length:.3f}", f"{prof.std_length:.3f}",
                                 f"{a}|{b}", f"{freq:.6f}"])
        return buf.getvalue()


def cluster_frequency_profile(clusters: ClusterSet, log: EventLog,
                              perspectives: tuple[str, str]) -> ProfileTable:
    """Per-cluster size, pathway-length moments, and the relative
    frequency of each pair of perspective values across member events."""
    p1, p2 = perspectives
    for p in (p1, p2):
        if p not in log.schema:
            raise ValueError(f"perspective {p!r} not in log schema")
    profiles = []
    for k, members in enumerate(clusters.clusters):
        present = sorted(m for m in members if m in log)
        lengths = []
        counts: dict[tuple[str, str], int] = {}
        total = 0
        for case in present:
            events = log.events_of(case)
            lengths.append(len(events))
            for ev in events:
                pair = (ev.perspectives[p1], ev.perspectives[p2])
                counts[pair] = counts.get(pair, 0) + 1
                total += 1
        freq = {pair: c / total for pair, c in counts.items()} if total else {}
        arr = np.array(lengths, dtype=float) if lengths else np.zeros(0)
        profiles.append(ClusterProfile(
            label=f"C{k + 1}",
            n_patients=len(present),
            mean_length=float(arr.mean()) if arr.size else 0.0,
            std_length=float(arr.std()) if arr.size else 0.0,
            pair_frequency=freq))
    return ProfileTable(profiles, n_singletons=len(clusters.singletons))
