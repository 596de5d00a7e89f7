"""Sublevel-set cubical persistent homology of 2-D grayscale grids.

V-construction: pixels are vertices connected with 4-adjacency, an edge
takes the max of its endpoint values, a unit square the max of its four
corners, so faces never exceed cofaces and sublevel sets are subcomplexes.

H0 is computed by union-find with the elder rule (on a merge the
younger component, by (birth value, creator index), dies). H1 comes from
Z2 column reduction of the square/edge boundary matrix with cells ordered
by (value, dimension, index). The grid is planar, so there are no
essential H1 classes and every square column reduces to a nonzero pivot.

The single essential H0 class is kept with its death capped at the
filtration maximum 1.0 and flagged, which makes the dominant-bar removal
rule well-defined on finite values. Finite zero-lifetime pairs are
dropped at construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import check_image

__all__ = [
    "Diagram",
    "compute_diagram",
    "filter_h0",
    "truncate_h1",
    "betti_curve",
    "dump_diagram_tsv",
    "parse_diagram_tsv",
]

FILTRATION_MAX = 1.0


@dataclass(frozen=True)
class Diagram:
    """Multiset of (birth, death, dim) bars with a capped flag per bar."""

    births: np.ndarray
    deaths: np.ndarray
    dims: np.ndarray
    capped: np.ndarray

    def __post_init__(self):
        births = np.asarray(self.births, dtype=np.float64)
        deaths = np.asarray(self.deaths, dtype=np.float64)
        dims = np.asarray(self.dims, dtype=np.int8)
        capped = np.asarray(self.capped, dtype=bool)
        n = births.shape[0]
        if not (deaths.shape[0] == dims.shape[0] == capped.shape[0] == n):
            raise ValueError("diagram field lengths differ")
        finite = ~capped
        if np.any(births[finite] >= deaths[finite]):
            raise ValueError("finite bars must satisfy birth < death")
        if np.any(births > deaths):
            raise ValueError("bars must satisfy birth <= death")
        for name, arr in (("births", births), ("deaths", deaths), ("dims", dims), ("capped", capped)):
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.births.shape[0])

    @property
    def lifetimes(self) -> np.ndarray:
        return self.deaths - self.births

    def in_dim(self, dim: int) -> "Diagram":
        sel = self.dims == dim
        return Diagram(self.births[sel], self.deaths[sel], self.dims[sel], self.capped[sel])

    def pairs(self, dim: int | None = None) -> np.ndarray:
        """(k, 2) array of (birth, death) pairs, optionally for one dimension."""
        sel = slice(None) if dim is None else self.dims == dim
        return np.column_stack([self.births[sel], self.deaths[sel]])

    def select(self, idx) -> "Diagram":
        return Diagram(self.births[idx], self.deaths[idx], self.dims[idx], self.capped[idx])

    def canonical(self) -> "Diagram":
        """Bars sorted by (dim, birth, death, capped); the serialization order."""
        order = np.lexsort((self.capped, self.deaths, self.births, self.dims))
        return self.select(order)

    @staticmethod
    def empty() -> "Diagram":
        z = np.zeros(0)
        return Diagram(z, z, z.astype(np.int8), z.astype(bool))

    @staticmethod
    def from_bars(bars) -> "Diagram":
        """Build from an iterable of (birth, death, dim[, capped]) tuples."""
        rows = list(bars)
        if not rows:
            return Diagram.empty()
        births = np.array([r[0] for r in rows], dtype=np.float64)
        deaths = np.array([r[1] for r in rows], dtype=np.float64)
        dims = np.array([r[2] for r in rows], dtype=np.int8)
        capped = np.array([bool(r[3]) if len(r) > 3 else False for r in rows])
        return Diagram(births, deaths, dims, capped)


class _UnionFind:
    """Array union-find tracking each component's creator (birth, index)."""

    def __init__(self, n: int, birth_vals: np.ndarray):
        self.parent = np.arange(n, dtype=np.int64)
        self.birth_val = birth_vals
        self.birth_idx = np.arange(n, dtype=np.int64)

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def elder_merge(self, ra: int, rb: int) -> tuple[int, int]:
        """Merge two roots; return (elder_root, younger_root)."""
        ka = (self.birth_val[ra], self.birth_idx[ra])
        kb = (self.birth_val[rb], self.birth_idx[rb])
        elder, younger = (ra, rb) if ka <= kb else (rb, ra)
        self.parent[younger] = elder
        return elder, younger


def _grid_cells(img: np.ndarray):
    """Edge endpoints/values and square edge-ids/values for an m x n grid.

    Vertex id = r*n + c. Edges enumerate horizontal first (r*(n-1) + c),
    then vertical (offset + r*n + c). Squares enumerate by top-left corner.
    """
    m, n = img.shape
    v = img.ravel()
    vid = np.arange(m * n).reshape(m, n)

    ha = vid[:, :-1].ravel()
    hb = vid[:, 1:].ravel()
    va = vid[:-1, :].ravel()
    vb = vid[1:, :].ravel()
    ea = np.concatenate([ha, va])
    eb = np.concatenate([hb, vb])
    evals = np.maximum(v[ea], v[eb])

    n_h = m * (n - 1)
    h_eid = np.arange(n_h).reshape(m, n - 1)
    v_eid = n_h + np.arange((m - 1) * n).reshape(m - 1, n)
    # Square (r, c): top/bottom horizontal edges, left/right vertical edges.
    sq_edges = np.stack(
        [
            h_eid[:-1, :].ravel(),
            h_eid[1:, :].ravel(),
            v_eid[:, :-1].ravel(),
            v_eid[:, 1:].ravel(),
        ],
        axis=1,
    )
    sqvals = np.maximum(
        np.maximum(img[:-1, :-1], img[:-1, 1:]),
        np.maximum(img[1:, :-1], img[1:, 1:]),
    ).ravel()
    return ea, eb, evals, sq_edges, sqvals


def _h0_pairs(v: np.ndarray, ea, eb, evals, edge_order) -> list[tuple[float, float, bool]]:
    uf = _UnionFind(v.shape[0], v)
    bars: list[tuple[float, float, bool]] = []
    for e in edge_order:
        ra = uf.find(int(ea[e]))
        rb = uf.find(int(eb[e]))
        if ra == rb:
            continue  # positive edge, creates a cycle; paired by a square
        death = float(evals[e])
        _, younger = uf.elder_merge(ra, rb)
        birth = float(uf.birth_val[younger])
        if birth < death:
            bars.append((birth, death, False))
    root = uf.find(0)
    bars.append((float(uf.birth_val[root]), FILTRATION_MAX, True))
    return bars


def _xor_sorted(a: list[int], b: list[int]) -> list[int]:
    """Symmetric difference of two ascending int lists."""
    out: list[int] = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x == y:
            i += 1
            j += 1
        elif x < y:
            out.append(x)
            i += 1
        else:
            out.append(y)
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return out


def _h1_pairs(evals, sq_edges, sqvals, edge_order, sq_order) -> list[tuple[float, float, bool]]:
    n_edges = evals.shape[0]
    edge_rank = np.empty(n_edges, dtype=np.int64)
    edge_rank[edge_order] = np.arange(n_edges)
    rank_to_val = evals[edge_order]

    pivot_col: dict[int, list[int]] = {}
    bars: list[tuple[float, float, bool]] = []
    col_ranks = edge_rank[sq_edges]
    for s in sq_order:
        col = sorted(int(r) for r in col_ranks[s])
        while col:
            piv = col[-1]
            seen = pivot_col.get(piv)
            if seen is None:
                break
            col = _xor_sorted(col, seen)
        if not col:
            continue  # impossible on a planar grid; tolerated defensively
        pivot_col[piv] = col
        birth = float(rank_to_val[piv])
        death = float(sqvals[s])
        if birth < death:
            bars.append((birth, death, False))
    return bars


def compute_diagram(img) -> Diagram:
    """H0 and H1 sublevel persistence of a [0, 1] image, deterministic."""
    arr = check_image(img, min_side=2)
    if arr.min() < 0.0 or arr.max() > FILTRATION_MAX:
        raise ValueError("compute_diagram expects intensities in [0, 1]")

    v = arr.ravel()
    ea, eb, evals, sq_edges, sqvals = _grid_cells(arr)

    edge_order = np.lexsort((np.arange(evals.shape[0]), evals))
    sq_order = np.lexsort((np.arange(sqvals.shape[0]), sqvals))

    bars = [(b, d, 0, c) for b, d, c in _h0_pairs(v, ea, eb, evals, edge_order)]
    bars += [(b, d, 1, c) for b, d, c in _h1_pairs(evals, sq_edges, sqvals, edge_order, sq_order)]
    return Diagram.from_bars(bars).canonical()


def filter_h0(diag: Diagram) -> Diagram:
    """Drop the single dominant H0 bar (longest lifetime, capped bars ranked
    by their capped lifetime). H1 is untouched; an empty H0 passes through."""
    h0 = np.flatnonzero(diag.dims == 0)
    if h0.size == 0:
        return diag
    life = diag.lifetimes[h0]
    # Max by (lifetime, capped, -birth, -death): ties resolve toward the
    # capped/earliest-born bar, i.e. the global background component.
    order = np.lexsort((-diag.deaths[h0], -diag.births[h0], diag.capped[h0], life))
    dominant = h0[order[-1]]
    keep = np.ones(len(diag), dtype=bool)
    keep[dominant] = False
    return diag.select(keep)


def truncate_h1(diag: Diagram, h1_pct: float, order: str = "top") -> Diagram:
    """Keep ceil(h1_pct * |H1|) bars, ranked by lifetime.

    order="top" keeps the longest-lived bars; order="lowest" keeps the
    shortest-lived ones. Ties break by (birth, death) ascending. H0 is
    untouched.
    """
    if not 0.0 < h1_pct <= 1.0:
        raise ValueError(f"h1_pct must be in (0, 1], got {h1_pct}")
    if order not in ("top", "lowest"):
        raise ValueError(f"unknown h1 order {order!r}")
    h1 = np.flatnonzero(diag.dims == 1)
    if h1.size == 0:
        return diag
    k = int(np.ceil(h1_pct * h1.size))
    life = diag.lifetimes[h1]
    key = -life if order == "top" else life
    ranked = h1[np.lexsort((diag.deaths[h1], diag.births[h1], key))]
    keep = np.ones(len(diag), dtype=bool)
    keep[ranked[k:]] = False
    return diag.select(keep)


def betti_curve(diag: Diagram, dim: int, thresholds) -> np.ndarray:
    """Number of dim-classes alive at each threshold.

    A bar is alive at t when birth <= t and either t < death or the bar is
    capped (essential classes never truly die).
    """
    sub = diag.in_dim(dim)
    t = np.asarray(thresholds, dtype=np.float64)[:, None]
    alive = (sub.births[None, :] <= t) & ((t < sub.deaths[None, :]) | sub.capped[None, :])
    return alive.sum(axis=1)


def dump_diagram_tsv(diag: Diagram) -> str:
    """One bar per line: "dim<TAB>birth<TAB>death<TAB>capped", canonical order."""
    d = diag.canonical()
    lines = [
        f"{int(d.dims[i])}\t{float(d.births[i])!r}\t{float(d.deaths[i])!r}\t{int(d.capped[i])}"
        for i in range(len(d))
    ]
    return "".join(line + "\n" for line in lines)


def parse_diagram_tsv(text: str) -> Diagram:
    bars = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError(f"diagram line {lineno}: expected 4 tab-separated fields")
        bars.append((float(fields[1]), float(fields[2]), int(fields[0]), bool(int(fields[3]))))
    return Diagram.from_bars(bars)
