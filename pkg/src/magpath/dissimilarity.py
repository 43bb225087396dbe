"""Time-aware dissimilarity between patient pathways.

Two pathways are compared by aligning activity tuples in order:
an alignment is allowed when the activity distance is within ``delta``
and -- once a first alignment exists -- the elapsed times since the
last alignment differ by at most ``epsilon``.  Every unaligned element
costs ``penalty``; an alignment costs the weighted blend of activity
distance and elapsed-time distance.  The result is the minimum total
cost over all alignment/skip choices.

Two evaluators are provided: a memoized dynamic program (the production
path) and a literal recursive evaluator used as a ground-truth oracle
on small inputs.  The recursion's accumulated-time arguments are pure
functions of the last aligned positions, which is what makes the
4-index DP state exact.

Note the result is NOT a metric: the elapsed-time restriction breaks
the triangle inequality by design (two pathways can each align well
with a third yet not with each other).
"""

from __future__ import annotations

import hashlib
import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco

from .mag import Pathway

# -- activity-tuple distances ----------------------------------------


def dist_a_io(v1: tuple, v2: tuple) -> float:
    """Distance between (intervention, occupation, ...) tuples.

    0 when both components match, 0.3 for intervention only, 0.7 for
    occupation only, 1 otherwise.
    """
    same_i = v1[0] == v2[0]
    same_o = v1[1] == v2[1]
    if same_i:
        return 0.0 if same_o else 0.3
    return 0.7 if same_o else 1.0


def dist_a_di(v1: tuple, v2: tuple) -> float:
    """Distance between (diagnosis, intervention, ...) tuples.

    The diagnosis component (an ICD-style code) contributes 0.7 of the
    distance: 0 for an exact code match, 0.3 when only the 3-character
    disease prefix matches, 1 otherwise.  Intervention equality
    contributes the remaining 0.3.  Codes shorter than 3 characters are
    treated as matching nothing (with a warning).
    """
    d1, d2 = str(v1[0]), str(v2[0])
    if len(d1) < 3 or len(d2) < 3:
        warnings.warn(f"diagnosis code shorter than 3 characters: {d1!r} vs {d2!r}",
                      stacklevel=2)
        diag = 1.0
    elif d1 == d2:
        diag = 0.0
    elif d1[:3] == d2[:3]:
        diag = 0.3
    else:
        diag = 1.0
    return 0.7 * diag + 0.3 * (0.0 if v1[1] == v2[1] else 1.0)


def dist_t(t_ac: float, t2_ac: float, epsilon: float) -> float:
    """Elapsed-time distance: |t_ac - t'_ac| / epsilon, in [0,1] when callable."""
    return abs(t_ac - t2_ac) / epsilon


def table_distance(table: Mapping) -> Callable[[tuple, tuple], float]:
    """Wrap a symmetric {(a, b): value} lookup table as a distance function."""

    def fn(v1, v2):
        if v1 == v2:
            return float(table.get((v1, v2), 0.0))
        hit = table.get((v1, v2))
        if hit is None:
            hit = table.get((v2, v1))
        if hit is None:
            raise KeyError(f"no table entry for {v1!r} vs {v2!r}")
        return float(hit)

    return fn


ACTIVITY_DISTANCES: dict[str, Callable] = {
    "intervention-occupation": dist_a_io,
    "diagnosis-intervention": dist_a_di,
}


@dataclass
class DissimParams:
    """Alignment parameters.

    ``penalty`` must dominate the worst allowed alignment cost,
    ``omega_a * delta + (1 - omega_a)``; the default penalty of 1 is
    tight for the built-in distances.
    """

    delta: float = 0.5
    epsilon: float = 20.0
    omega_a: float = 0.5
    penalty: float = 1.0
    activity_distance: str | Callable | Mapping = "intervention-occupation"

    def __post_init__(self):
        if not 0.0 <= self.omega_a <= 1.0:
            raise ValueError("omega_a must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        floor = self.omega_a * self.delta + (1.0 - self.omega_a)
        if self.penalty < floor - 1e-12:
            raise ValueError(
                f"penalty {self.penalty} below maximum alignment cost {floor}")

    def resolve_distance(self) -> Callable[[tuple, tuple], float]:
        sel = self.activity_distance
        if callable(sel):
            return sel
        if isinstance(sel, str):
            try:
                return ACTIVITY_DISTANCES[sel]
            except KeyError:
                raise ValueError(f"unknown activity distance {sel!r}") from None
        return table_distance(sel)

    def describe(self) -> dict:
        sel = self.activity_distance
        name = sel if isinstance(sel, str) else "custom"
        return {"delta": self.delta, "epsilon": self.epsilon,
                "omega_a": self.omega_a, "penalty": self.penalty,
                "activity_distance": name}

    @classmethod
    def from_dict(cls, d: Mapping) -> "DissimParams":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown parameter(s): {sorted(unknown)}")
        return cls(**dict(d))


# -- memoized evaluator ----------------------------------------------
#
# The recursion's state is (suffix of A, suffix of A', accumulated
# times).  Accumulators are either both unset, or equal the elapsed
# time from the last aligned elements (p, q) to the current suffix
# heads (i, j) -- recoverable from interval prefix sums.  So the
# reachable states are exactly (i, j) with no alignment yet, plus
# (i, j, p, q) with p < i, q < j, giving an O(m^2 m'^2) table.
#
# The kernel iterates i-planes from the back, keeping two planes of the
# 4-index table: value(i, j, p, q) needs (i+1, j, p, q), (i, j+1, p, q)
# and the align target (i+1, j+1, i, j).


def _dp_kernel_py(D, pref, pref2, delta, eps, omega, penalty):
    m, m2 = D.shape
    DN = np.zeros((m + 1, m2 + 1))
    cur = np.zeros((m2 + 1, m, m2))
    nxt = np.zeros((m2 + 1, m, m2))
    for i in range(m, -1, -1):
        for j in range(m2, -1, -1):
            if i == m or j == m2:
                v = penalty * ((m - i) + (m2 - j))
                DN[i, j] = v
                for p in range(m):
                    for q in range(m2):
                        cur[j, p, q] = v
                continue
            dA = D[i, j]
            skip_a = penalty + DN[i + 1, j]
            skip_b = penalty + DN[i, j + 1]
            best = skip_a if skip_a < skip_b else skip_b
            if dA <= delta:
                align = omega * dA + nxt[j + 1, i, j]
                if align <= best:
                    best = align
            DN[i, j] = best
            for p in range(i):
                t_ac = pref[i] - pref[p]
                for q in range(j):
                    gap = t_ac - (pref2[j] - pref2[q])
                    if gap < 0.0:
                        gap = -gap
                    sa = penalty + nxt[j, p, q]
                    sb = penalty + cur[j + 1, p, q]
                    best2 = sa if sa < sb else sb
                    if dA <= delta and gap <= eps:
                        align = (omega * dA + (1.0 - omega) * (gap / eps)
                                 + nxt[j + 1, i, j])
                        if align <= best2:
                            best2 = align
                    cur[j, p, q] = best2
        cur, nxt = nxt, cur
    return DN[0, 0]


_dp_kernel = njit(cache=True, nogil=True)(_dp_kernel_py) if HAVE_NUMBA else _dp_kernel_py


def _distance_matrix(P: Pathway, P2: Pathway, fn) -> np.ndarray:
    out = np.empty((len(P.A), len(P2.A)))
    for i, a in enumerate(P.A):
        for j, b in enumerate(P2.A):
            out[i, j] = fn(a, b)
    return out


def _prefix(T: Sequence[float]) -> np.ndarray:
    out = np.zeros(len(T) + 1)
    np.cumsum(np.asarray(T, dtype=float), out=out[1:])
    return out


def dissimilarity(P: Pathway, P2: Pathway, params: DissimParams | None = None) -> float:
    """Minimum-cost time-aware alignment distance between two pathways.

    Equals the recursive definition (see :func:`dissimilarity_bruteforce`)
    but runs in O(|A|^2 |A'|^2) via the 4-index dynamic program.
    """
    params = params or DissimParams()
    m, m2 = len(P.A), len(P2.A)
    if m == 0 or m2 == 0:
        return params.penalty * (m + m2)
    D = _distance_matrix(P, P2, params.resolve_distance())
    pref = _prefix(P.T)[:m]
    pref2 = _prefix(P2.T)[:m2]
    return float(_dp_kernel(np.ascontiguousarray(D), pref, pref2,
                            params.delta, params.epsilon,
                            params.omega_a, params.penalty))


def dissimilarity_bruteforce(P: Pathway, P2: Pathway,
                             params: DissimParams | None = None) -> float:
    """Ground-truth evaluator: the recursion followed literally, no memo.

    Exponential -- guarded to |A| * |A'| <= 144.  Kept deliberately
    plain so its correctness is inspectable; the production evaluator
    is tested against it.
    """
    params = params or DissimParams()
    m, m2 = len(P.A), len(P2.A)
    if m * m2 > 144:
        raise ValueError(f"oracle guard exceeded: {m}x{m2} > 12x12")
    fn = params.resolve_distance()
    D = [[fn(a, b) for b in P2.A] for a in P.A]
    T, T2 = P.T, P2.T
    delta, eps = params.delta, params.epsilon
    omega, penalty = params.omega_a, params.penalty

    def head(t, k):
        # Head of the interval suffix; past the end it can never
        # influence the result (the activity suffix is then empty).
        return t[k] if k < len(t) else 0.0

    def rec(i, j, t_ac, t2_ac):
        if i >= m and j >= m2:
            return 0.0
        if i >= m or j >= m2:
            return penalty + rec(i + 1, j + 1, None, None)
        d = D[i][j]
        if t_ac is None:
            skip_a = penalty + rec(i + 1, j, None, None)
            skip_b = penalty + rec(i, j + 1, None, None)
            if d > delta:
                return min(skip_a, skip_b)
            align = omega * d + rec(i + 1, j + 1, head(T, i), head(T2, j))
            return min(align, skip_a, skip_b)
        if d > delta or abs(t_ac - t2_ac) > eps:
            return min(penalty + rec(i + 1, j, t_ac + head(T, i), t2_ac),
                       penalty + rec(i, j + 1, t_ac, t2_ac + head(T2, j)))
        align = (omega * d + (1.0 - omega) * dist_t(t_ac, t2_ac, eps)
                 + rec(i + 1, j + 1, head(T, i), head(T2, j)))
        return min(align,
                   penalty + rec(i + 1, j, t_ac + head(T, i), t2_ac),
                   penalty + rec(i, j + 1, t_ac, t2_ac + head(T2, j)))

    return rec(0, 0, None, None)


def normalized_dissimilarity(P: Pathway, P2: Pathway,
                             params: DissimParams | None = None) -> float:
    """Dissimilarity divided by the summed pathway lengths (0 for two
    empty pathways); bounded by the penalty, so in [0,1] by default."""
    total = len(P.A) + len(P2.A)
    if total == 0:
        return 0.0
    return dissimilarity(P, P2, params) / total


# -- pairwise matrices -----------------------------------------------


@dataclass
class DissimilarityMatrix:
    ids: tuple[str, ...]
    values: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.ids)

    def save(self, prefix: str | Path) -> None:
        """Write ``<prefix>.f64`` (row-major doubles) plus a JSON sidecar
        with the id order, parameters and a content checksum."""
        prefix = Path(prefix)
        raw = np.ascontiguousarray(self.values, dtype=np.float64).tobytes()
        prefix.with_suffix(".f64").write_bytes(raw)
        sidecar = {"ids": list(self.ids), "params": self.params,
                   "shape": list(self.values.shape),
                   "sha256": hashlib.sha256(raw).hexdigest()}
        prefix.with_suffix(".json").write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def load(cls, prefix: str | Path) -> "DissimilarityMatrix":
        prefix = Path(prefix)
        sidecar = json.loads(prefix.with_suffix(".json").read_text())
        raw = prefix.with_suffix(".f64").read_bytes()
        if hashlib.sha256(raw).hexdigest() != sidecar["sha256"]:
            raise ValueError("matrix payload does not match its checksum")
        values = np.frombuffer(raw, dtype=np.float64).reshape(sidecar["shape"]).copy()
        return cls(tuple(sidecar["ids"]), values, sidecar.get("params", {}))

    def to_text(self, delimiter: str = ",") -> str:
        lines = [delimiter.join(self.ids)]
        for row in self.values:
            lines.append(delimiter.join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"


def pairwise_matrix(pathways: Sequence[Pathway], params: DissimParams | None = None,
                    workers: int = 1, ids: Sequence[str] | None = None,
                    progress: Callable[[int, int], None] | None = None,
                    ) -> DissimilarityMatrix:
    """Symmetric matrix of normalized dissimilarities, zero diagonal.

    ``workers`` only changes wall-clock behaviour: each (i, j) entry is
    an independent pure function of its pair, so the result is
    bit-identical for any worker count.
    """
    if not pathways:
        raise ValueError("need at least one pathway")
    params = params or DissimParams()
    n = len(pathways)
    if ids is None:
        ids = [str(k) for k in range(n)]
    if len(ids) != n:
        raise ValueError("ids length does not match pathway count")
    values = np.zeros((n, n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    def compute(ij):
        i, j = ij
        return i, j, normalized_dissimilarity(pathways[i], pathways[j], params)

    done = 0
    if workers <= 1:
        results = map(compute, pairs)
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        results = pool.map(compute, pairs)
    for i, j, v in results:
        values[i, j] = values[j, i] = v
        done += 1
        if progress is not None:
            progress(done, len(pairs))
    if workers > 1:
        pool.shutdown()
    return DissimilarityMatrix(tuple(ids), values, params.describe())
