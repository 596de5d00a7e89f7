"""Exact persistence-diagram distances and point-cloud Wasserstein-2.

All solvers here are exact; these distances serve as oracles for the
stability bounds, so approximation error is not acceptable. Hard size
caps raise instead of silently approximating.

Diagonal projections. The nearest diagonal point to (b, d) under the
chosen ground norm, writing L = d - b:
  l-inf: midpoint ((b+d)/2, (b+d)/2), cost max(L/2, L/2) = L/2;
  l1:    any diagonal point (t, t) with t in [b, d] realizes
         |b-t| + |d-t| = L, so the cost is L;
  l2:    orthogonal projection = midpoint, cost sqrt(2 (L/2)^2) = L/sqrt(2).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist

__all__ = [
    "DIAGONAL",
    "MatchingResult",
    "W2CloudResult",
    "bottleneck",
    "wasserstein1",
    "wasserstein2_clouds",
    "format_report_row",
    "REPORT_HEADER",
]

log = logging.getLogger(__name__)

DIAGONAL = -1  # sentinel index for "matched to the diagonal"

DEFAULT_SIZE_CAP = 512

_GROUND_METRICS = {1: "cityblock", 2: "euclidean", "inf": "chebyshev"}
_DIAG_FACTOR = {1: 1.0, 2: 1.0 / np.sqrt(2.0), "inf": 0.5}


def _as_pairs(diag) -> np.ndarray:
    pairs = np.asarray(getattr(diag, "pairs", lambda: diag)(), dtype=np.float64)
    if pairs.size == 0:
        return np.zeros((0, 2))
    pairs = pairs.reshape(-1, 2)
    if np.any(pairs[:, 0] > pairs[:, 1]):
        raise ValueError("diagram points must satisfy birth <= death")
    return pairs


def _ground_key(ground_p):
    if ground_p in (np.inf, float("inf"), "inf"):
        return "inf"
    if ground_p in (1, 2):
        return ground_p
    raise ValueError(f"ground_p must be 1, 2, or inf, got {ground_p!r}")


def _diag_costs(pairs: np.ndarray, key) -> np.ndarray:
    return (pairs[:, 1] - pairs[:, 0]) * _DIAG_FACTOR[key]


@dataclass(frozen=True)
class MatchingResult:
    """Optimal transport cost plus the realizing matching.

    matching pairs are (i, j) with i indexing the first diagram, j the
    second, and DIAGONAL standing in for a diagonal projection.
    """

    cost: float
    matching: tuple[tuple[int, int], ...]

    def recompute_cost(self, d1, d2, ground_p) -> float:
        key = _ground_key(ground_p)
        a, b = _as_pairs(d1), _as_pairs(d2)
        total = 0.0
        for i, j in self.matching:
            if i == DIAGONAL and j == DIAGONAL:
                continue
            if j == DIAGONAL:
                total += _diag_costs(a[i : i + 1], key)[0]
            elif i == DIAGONAL:
                total += _diag_costs(b[j : j + 1], key)[0]
            else:
                total += cdist(a[i : i + 1], b[j : j + 1], metric=_GROUND_METRICS[key])[0, 0]
        return total


def wasserstein1(d1, d2, ground_p=np.inf, size_cap: int = DEFAULT_SIZE_CAP) -> MatchingResult:
    """Exact 1-Wasserstein matching between two single-dimension diagrams.

    Square assignment on the (n+m) x (n+m) augmented matrix: each point
    may match its own diagonal projection (off-slot cells are infeasible)
    and diagonal-diagonal cells cost zero. Solved exactly by the
    Hungarian-type solver.
    """
    key = _ground_key(ground_p)
    a, b = _as_pairs(d1), _as_pairs(d2)
    n, m = a.shape[0], b.shape[0]
    if n + m == 0:
        return MatchingResult(0.0, ())
    if n + m > size_cap:
        raise ValueError(
            f"combined diagram size {n + m} exceeds the exact-solver cap {size_cap}; "
            "subsample the diagrams before calling wasserstein1"
        )

    size = n + m
    cost = np.full((size, size), np.inf)
    if n and m:
        cost[:n, :m] = cdist(a, b, metric=_GROUND_METRICS[key])
    if n:
        cost[np.arange(n), m + np.arange(n)] = _diag_costs(a, key)
    if m:
        cost[n + np.arange(m), np.arange(m)] = _diag_costs(b, key)
    cost[n:, m:] = 0.0

    rows, cols = linear_sum_assignment(cost)
    total = float(cost[rows, cols].sum())
    matching = []
    for i, j in zip(rows, cols):
        if i < n and j < m:
            matching.append((int(i), int(j)))
        elif i < n:
            matching.append((int(i), DIAGONAL))
        elif j < m:
            matching.append((DIAGONAL, int(j)))
    return MatchingResult(total, tuple(matching))


def _bottleneck_feasible(cross: np.ndarray, da: np.ndarray, db: np.ndarray, t: float) -> bool:
    """Is there a perfect matching at threshold t in the augmented graph?

    Left nodes: the n points of A then m diagonal slots (one per B point).
    Right nodes: the m points of B then n diagonal slots (one per A point).
    A point may use its own diagonal slot when its projection cost fits;
    diagonal slots pair with each other freely.
    """
    n, m = cross.shape
    rows: list[int] = []
    cols: list[int] = []
    if n and m:
        r, c = np.nonzero(cross <= t)
        rows.extend(r.tolist())
        cols.extend(c.tolist())
    for i in np.flatnonzero(da <= t):
        rows.append(int(i))
        cols.append(m + int(i))
    for j in np.flatnonzero(db <= t):
        rows.append(n + int(j))
        cols.append(int(j))
    # Diagonal-diagonal block: always allowed, cost 0.
    for j in range(m):
        for i in range(n):
            rows.append(n + j)
            cols.append(m + i)
    size = n + m
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck(d1, d2) -> float:
    """Exact bottleneck distance (l-inf ground metric, diagonal allowed).

    Binary search over the finite candidate set of pairwise and
    point-to-diagonal costs, testing feasibility with an exact bipartite
    matching at each probe.
    """
    a, b = _as_pairs(d1), _as_pairs(d2)
    n, m = a.shape[0], b.shape[0]
    if n == 0 and m == 0:
        return 0.0
    da = _diag_costs(a, "inf")
    db = _diag_costs(b, "inf")
    cross = cdist(a, b, metric="chebyshev") if n and m else np.zeros((n, m))

    candidates = np.unique(np.concatenate([cross.ravel(), da, db, [0.0]]))
    lo, hi = 0, candidates.size - 1
    if _bottleneck_feasible(cross, da, db, float(candidates[lo])):
        return float(candidates[lo])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _bottleneck_feasible(cross, da, db, float(candidates[mid])):
            hi = mid
        else:
            lo = mid
    return float(candidates[hi])


@dataclass(frozen=True)
class W2CloudResult:
    """Empirical Wasserstein-2 between two subsampled point clouds."""

    value: float
    n_requested: int
    n_used: int
    size_a: int
    size_b: int
    seed: int


def wasserstein2_clouds(a, b, n_sub: int, seed: int) -> W2CloudResult:
    """Exact W2 between equal-size subsamples of two point clouds.

    Both clouds are subsampled without replacement to
    min(n_sub, |a|, |b|) points (seeded); the value is the square root of
    the mean optimal squared-Euclidean assignment cost.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"clouds must be 2-D with matching width, got {a.shape} and {b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("clouds must be nonempty")
    if n_sub < 1:
        raise ValueError(f"n_sub must be positive, got {n_sub}")

    n_used = min(n_sub, a.shape[0], b.shape[0])
    if n_used < n_sub:
        log.warning(
            "w2 subsample reduced from %d to %d (cloud sizes %d, %d; sampling without replacement)",
            n_sub, n_used, a.shape[0], b.shape[0],
        )
    rng = np.random.default_rng(seed)
    sub_a = a[rng.choice(a.shape[0], size=n_used, replace=False)] if n_used < a.shape[0] else a
    sub_b = b[rng.choice(b.shape[0], size=n_used, replace=False)] if n_used < b.shape[0] else b

    cost = cdist(sub_a, sub_b, metric="sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    value = float(np.sqrt(cost[rows, cols].mean()))
    return W2CloudResult(value, n_sub, n_used, a.shape[0], b.shape[0], seed)


REPORT_HEADER = "metric\tp\tdim\tvalue\tn1\tn2\tseed"


def format_report_row(metric: str, p, dim, value: float, n1: int, n2: int, seed) -> str:
    return f"{metric}\t{p}\t{dim}\t{value!r}\t{n1}\t{n2}\t{seed}"
