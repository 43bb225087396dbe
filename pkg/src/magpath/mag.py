"""Multi-aspect graphs over patient event sequences.

Nodes are tuples with one value per aspect (e.g. intervention,
occupation, unit, plus an ordinal position aspect appended last); each
patient contributes a chain of edges carrying ``patient`` and
``interval`` attributes.  The graph is immutable: editing operations --
projection onto an aspect subset, node removal with interval bridging,
attribute-based contraction -- return new values.

Internally each patient's chain is stored as a visit sequence plus the
intervals between consecutive visits; the edge multiset is a derived
view.  This keeps chain order explicit even when the ordinal aspect has
been projected away.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .eventlog import TIME_UNITS, EventLog

#: Name of the per-pathway ordinal aspect, always the last tuple slot.
SEQUENCE = "Sequence"

_START = "__start__"
_END = "__end__"


def start_node(arity: int) -> tuple:
    return (_START,) * arity


def end_node(arity: int) -> tuple:
    return (_END,) * arity


def is_virtual(node: tuple) -> bool:
    return len(set(node)) == 1 and node[0] in (_START, _END)


@dataclass(frozen=True)
class MagEdge:
    origin: tuple
    target: tuple
    patient: str
    interval: float


@dataclass(frozen=True)
class Pathway:
    """A patient pathway: activity tuples ``A`` and intervals ``T``.

    ``T[k]`` is the elapsed time between ``A[k]`` and ``A[k+1]``, so
    ``len(T) == len(A) - 1``; virtual endpoints are never included.
    """

    A: tuple
    T: tuple

    def __post_init__(self):
        if self.A and len(self.T) != len(self.A) - 1:
            raise ValueError("need exactly one interval per consecutive pair")
        if any(t < 0 for t in self.T):
            raise ValueError("negative interval")

    @property
    def m(self) -> int:
        return len(self.A)


class Mag:
    """Immutable multi-aspect multigraph of per-patient chains."""

    def __init__(self, aspects: Sequence[str],
                 paths: Mapping[str, tuple[Sequence[tuple], Sequence[float]]],
                 time_unit: str = "days",
                 extra_nodes: Iterable[tuple] = ()):
        self.aspects: tuple[str, ...] = tuple(aspects)
        if time_unit not in TIME_UNITS:
            raise ValueError(f"unknown time unit {time_unit!r}")
        self.time_unit = time_unit
        arity = len(self.aspects)
        clean: dict[str, tuple[tuple, tuple]] = {}
        for pid, (visits, intervals) in paths.items():
            visits = tuple(tuple(v) for v in visits)
            intervals = tuple(float(x) for x in intervals)
            if not visits:
                continue
            if len(intervals) != len(visits) - 1:
                raise ValueError(f"patient {pid!r}: {len(visits)} visits need "
                                 f"{len(visits) - 1} intervals, got {len(intervals)}")
            bad = [v for v in visits if len(v) != arity]
            if bad:
                raise ValueError(f"patient {pid!r}: node arity != {arity}: {bad[0]}")
            if any(t < 0 for t in intervals):
                raise ValueError(f"patient {pid!r}: negative interval")
            clean[pid] = (visits, intervals)
        self._paths = clean
        self._extra_nodes = frozenset(tuple(v) for v in extra_nodes)

    # -- views -------------------------------------------------------

    @property
    def patients(self) -> list[str]:
        return sorted(self._paths)

    def path_of(self, patient: str) -> tuple[tuple, tuple]:
        return self._paths[patient]

    @property
    def nodes(self) -> frozenset:
        seen = set(self._extra_nodes)
        for visits, _ in self._paths.values():
            seen.update(visits)
        return frozenset(seen)

    @property
    def edges(self) -> list[MagEdge]:
        """All edges, ordered by patient id then chain position."""
        out = []
        for pid in self.patients:
            visits, intervals = self._paths[pid]
            for k in range(len(visits) - 1):
                out.append(MagEdge(visits[k], visits[k + 1], pid, intervals[k]))
        return out

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(max(len(v) - 1, 0) for v, _ in self._paths.values())

    @property
    def real_nodes(self) -> frozenset:
        return frozenset(n for n in self.nodes if not is_virtual(n))

    # -- editing (all return new Mag values) -------------------------

    def subdetermine(self, keep: Sequence[str]) -> "Mag":
        """Project every node onto the ``keep`` aspects, in ``keep`` order.

        Edge multiplicity and attributes are preserved; consecutive
        visits that become identical turn into self-loop edges.
        """
        keep = list(keep)
        if not keep:
            raise ValueError("cannot project onto an empty aspect set")
        if len(set(keep)) != len(keep):
            raise ValueError("duplicate aspect in projection")
        unknown = [a for a in keep if a not in self.aspects]
        if unknown:
            raise ValueError(f"unknown aspect(s): {unknown}")
        idx = [self.aspects.index(a) for a in keep]
        project = lambda nd: tuple(nd[i] for i in idx)
        paths = {pid: (tuple(project(v) for v in visits), intervals)
                 for pid, (visits, intervals) in self._paths.items()}
        extras = {project(v) for v in self._extra_nodes}
        return Mag([self.aspects[i] for i in idx], paths, self.time_unit, extras)

    def remove_node(self, node: tuple) -> "Mag":
        """Delete ``node``, bridging each patient's chain across it.

        A bridging edge's interval is the sum of the intervals it
        replaces (chains of repeated visits are summed through), so each
        patient's end-to-end elapsed time is conserved.  If the node is
        the first or last of a chain the dangling edge is dropped --
        with virtual endpoints present every real node is interior, so
        the chain stays anchored.
        """
        node = tuple(node)
        if node not in self.nodes:
            raise KeyError(f"node not in graph: {node!r}")
        paths = {}
        for pid, (visits, intervals) in self._paths.items():
            new_v: list[tuple] = []
            new_t: list[float] = []
            carry = 0.0
            for k, v in enumerate(visits):
                inc = intervals[k - 1] if k > 0 else 0.0
                if v == node:
                    if new_v:
                        carry += inc
                    continue
                if new_v:
                    new_t.append(carry + inc)
                new_v.append(v)
                carry = 0.0
            if new_v:
                paths[pid] = (new_v, new_t)
        extras = self._extra_nodes - {node}
        return Mag(self.aspects, paths, self.time_unit, extras)

    def contract_nodes(self, mapper: Callable[[tuple], tuple]) -> "Mag":
        """Merge nodes by mapping each real node tuple to a replacement.

        ``mapper`` must keep the tuple arity; virtual endpoints are left
        untouched.  Edges are re-targeted with attributes preserved, so
        the edge count never changes.
        """
        arity = len(self.aspects)

        def apply(nd: tuple) -> tuple:
            if is_virtual(nd):
                return nd
            out = tuple(mapper(nd))
            if len(out) != arity:
                raise ValueError(f"mapper changed arity for {nd!r}: {out!r}")
            return out

        paths = {pid: (tuple(apply(v) for v in visits), intervals)
                 for pid, (visits, intervals) in self._paths.items()}
        extras = {apply(v) for v in self._extra_nodes}
        return Mag(self.aspects, paths, self.time_unit, extras)

    # -- extraction --------------------------------------------------

    def extract_pathway(self, patient: str) -> Pathway:
        """The patient's activity/interval sequences, endpoints stripped."""
        if patient not in self._paths:
            raise KeyError(f"unknown patient {patient!r}")
        visits, intervals = self._paths[patient]
        lo = 0
        hi = len(visits)
        while lo < hi and is_virtual(visits[lo]):
            lo += 1
        while hi > lo and is_virtual(visits[hi - 1]):
            hi -= 1
        return Pathway(tuple(visits[lo:hi]), tuple(intervals[lo:hi - 1]) if hi > lo else ())

    # -- serialization -----------------------------------------------

    def to_json(self) -> str:
        """Deterministic JSON: sorted node list, edges by (patient, position)."""
        nodes = sorted(self.nodes, key=lambda nd: json.dumps(list(nd)))
        edges = [{"origin": list(e.origin), "target": list(e.target),
                  "patient": e.patient, "interval": e.interval}
                 for e in self.edges]
        obj = {"aspects": list(self.aspects), "time_unit": self.time_unit,
               "nodes": [list(nd) for nd in nodes], "edges": edges}
        return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Mag":
        """Rebuild from :meth:`to_json` output.

        Chains are recovered from per-patient edge record order; nodes
        that appear in no edge come back as isolated (patient
        association of single-visit, endpoint-free chains is not part of
        the edge-record interface).
        """
        obj = json.loads(text)
        aspects = obj["aspects"]
        by_patient: dict[str, list[dict]] = {}
        for rec in obj["edges"]:
            by_patient.setdefault(rec["patient"], []).append(rec)
        paths = {}
        touched = set()
        for pid, recs in by_patient.items():
            visits = [tuple(recs[0]["origin"])]
            intervals = []
            for rec in recs:
                if tuple(rec["origin"]) != visits[-1]:
                    raise ValueError(f"patient {pid!r}: edge records do not chain")
                visits.append(tuple(rec["target"]))
                intervals.append(rec["interval"])
            paths[pid] = (visits, intervals)
            touched.update(visits)
        extras = [tuple(nd) for nd in obj["nodes"] if tuple(nd) not in touched]
        return cls(aspects, paths, obj.get("time_unit", "days"), extras)


def build_mag(log: EventLog, aspect_names: Sequence[str],
              add_virtual_endpoints: bool = True) -> Mag:
    """Convert an event log into a multi-aspect graph.

    ``aspect_names`` selects (and orders) perspectives from the log
    schema; the ordinal aspect is always appended last, numbering each
    case's events 1..m.  Edge intervals are timestamp differences in the
    log's time unit.  With virtual endpoints, every chain is wrapped as
    START -> first ... last -> END with zero-length boundary intervals.
    """
    names = [a for a in aspect_names if a != SEQUENCE]
    unknown = [a for a in names if a not in log.schema]
    if unknown:
        raise ValueError(f"aspect(s) not in log schema: {unknown}")
    if not names:
        raise ValueError("need at least one perspective aspect")
    aspects = [*names, SEQUENCE]
    arity = len(aspects)
    unit_seconds = TIME_UNITS[log.time_unit]
    paths = {}
    for cid in log.case_ids:
        events = log.events_of(cid)
        visits = [tuple(ev.perspectives[a] for a in names) + (k + 1,)
                  for k, ev in enumerate(events)]
        intervals = [
            (events[k + 1].timestamp - events[k].timestamp).total_seconds() / unit_seconds
            for k in range(len(events) - 1)]
        if add_virtual_endpoints:
            visits = [start_node(arity), *visits, end_node(arity)]
            intervals = [0.0, *intervals, 0.0]
        paths[cid] = (visits, intervals)
    return Mag(aspects, paths, log.time_unit)


# -- aggregated simple-digraph view ----------------------------------

@dataclass
class AggregateEdge:
    origin: tuple
    target: tuple
    weight: float
    intervals: tuple[float, ...]
    patients: tuple[str, ...]

    @property
    def distinct_patients(self) -> int:
        return len(set(self.patients))


class WeightedDigraph:
    """Simple directed graph with per-edge multiplicity and interval lists."""

    def __init__(self, nodes: Iterable[tuple], edges: Mapping[tuple, AggregateEdge]):
        self.nodes: tuple = tuple(sorted(nodes, key=lambda nd: json.dumps(list(nd))))
        self.index = {nd: i for i, nd in enumerate(self.nodes)}
        self.edges: dict[tuple, AggregateEdge] = dict(edges)

    @classmethod
    def from_weights(cls, weights: Mapping[tuple, float],
                     extra_nodes: Iterable[tuple] = ()) -> "WeightedDigraph":
        nodes = set(tuple(v) for v in extra_nodes)
        edges = {}
        for (o, t), w in weights.items():
            o, t = tuple(o), tuple(t)
            nodes.update((o, t))
            edges[(o, t)] = AggregateEdge(o, t, w, (), ())
        return cls(nodes, edges)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def weight(self, origin: tuple, target: tuple) -> float:
        e = self.edges.get((origin, target))
        return e.weight if e else 0

    def total_weight(self) -> int:
        return sum(e.weight for e in self.edges.values())

    def successors(self, node: tuple) -> list[tuple]:
        return sorted((t for (o, t) in self.edges if o == node),
                      key=lambda nd: json.dumps(list(nd)))

    def adjacency(self):
        import numpy as np
        a = np.zeros((self.n, self.n))
        for (o, t), e in self.edges.items():
            a[self.index[o], self.index[t]] = e.weight
        return a


def aggregate_digraph(mag: Mag) -> WeightedDigraph:
    """Collapse parallel edges; weight = multiplicity, intervals kept."""
    acc: dict[tuple, list] = {}
    for e in mag.edges:
        key = (e.origin, e.target)
        acc.setdefault(key, []).append(e)
    edges = {key: AggregateEdge(key[0], key[1], len(group),
                                tuple(g.interval for g in group),
                                tuple(g.patient for g in group))
             for key, group in acc.items()}
    return WeightedDigraph(mag.nodes, edges)
