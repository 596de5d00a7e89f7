"""Orthonormal 2-D discrete wavelet transform with periodized boundaries.

The per-level transform is the orthogonal matrix whose rows are the
even-translate cyclic shifts of the analysis low-pass filter followed by
those of its quadrature-mirror high-pass. Periodization wraps at
row/column 0; db4 subband values near the edges depend on this seam.
Orthogonality (hence Parseval and perfect reconstruction) holds whenever
the signal length is even and at least the filter length, which the
depth precondition enforces.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import expit

from .container import write_raw
from .image import check_image

__all__ = [
    "FAMILIES",
    "SubbandPyramid",
    "dwt2",
    "idwt2",
    "tau",
    "dump_pyramid",
]

# Orthonormal scaling (low-pass) coefficients, 17 significant digits,
# from the standard Daubechies tables (haar = db1). The high-pass is the
# quadrature mirror h[i] = (-1)^i g[L-1-i].
FAMILIES: dict[str, tuple[float, ...]] = {
    "haar": (
        0.70710678118654753,
        0.70710678118654753,
    ),
    "db2": (
        0.48296291314469025,
        0.83651630373746899,
        0.22414386804185735,
        -0.12940952255092145,
    ),
    "db4": (
        0.23037781330885523,
        0.71484657055254153,
        0.63088076792959036,
        -0.02798376941698385,
        -0.18703481171888114,
        0.030841381835986965,
        0.032883011666982945,
        -0.010597401784997278,
    ),
}

VALID_DEPTHS = (1, 2, 3)


def _filters(family: str) -> tuple[np.ndarray, np.ndarray]:
    try:
        g = np.array(FAMILIES[family])
    except KeyError:
        raise ValueError(f"unknown wavelet family {family!r}; expected one of {sorted(FAMILIES)}") from None
    h = np.array([(-1.0) ** i * g[g.size - 1 - i] for i in range(g.size)])
    return g, h


@lru_cache(maxsize=None)
def _analysis_matrix(family: str, n: int) -> np.ndarray:
    g, h = _filters(family)
    if n % 2 != 0 or n < g.size:
        raise ValueError(f"signal length {n} too short for {family} (filter length {g.size})")
    w = np.zeros((n, n))
    half = n // 2
    for k in range(half):
        for i in range(g.size):
            col = (2 * k + i) % n
            w[k, col] += g[i]
            w[half + k, col] += h[i]
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class SubbandPyramid:
    """J-level decomposition: approximation ll plus (lh, hl, hh) per level.

    details[j-1] holds level j; lh is low-pass vertical / high-pass
    horizontal, hl the transpose arrangement, hh high-pass in both.
    """

    family: str
    depth: int
    ll: np.ndarray
    details: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]

    def level(self, j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not 1 <= j <= self.depth:
            raise ValueError(f"level {j} outside 1..{self.depth}")
        return self.details[j - 1]

    @property
    def side(self) -> int:
        return self.details[0][0].shape[0] * 2

    def energy(self) -> float:
        total = float(np.sum(self.ll**2))
        for bands in self.details:
            total += sum(float(np.sum(b**2)) for b in bands)
        return total


def dwt2(img, family: str, depth: int) -> SubbandPyramid:
    """Separable periodized analysis transform, recursing on the LL band."""
    arr = check_image(img, min_side=2)
    s = arr.shape[0]
    if arr.shape[1] != s:
        raise ValueError(f"dwt2 expects a square input, got {arr.shape}")
    if s & (s - 1):
        raise ValueError(f"dwt2 expects a power-of-two side, got {s}")
    if depth not in VALID_DEPTHS:
        raise ValueError(f"depth must be one of {VALID_DEPTHS}, got {depth}")
    g, _ = _filters(family)
    if s // 2**depth < g.size:
        raise ValueError(
            f"subband side {s // 2**depth} at depth {depth} is smaller than "
            f"the {family} filter support ({g.size})"
        )

    details = []
    x = arr
    n = s
    for _ in range(depth):
        w = _analysis_matrix(family, n)
        y = w @ x @ w.T
        half = n // 2
        details.append((y[:half, half:], y[half:, :half], y[half:, half:]))
        x = y[:half, :half]
        n = half
    return SubbandPyramid(family=family, depth=depth, ll=x, details=tuple(details))


def idwt2(pyr: SubbandPyramid) -> np.ndarray:
    """Inverse transform; exact up to float rounding by orthogonality."""
    x = np.asarray(pyr.ll, dtype=np.float64)
    for lh, hl, hh in reversed(pyr.details):
        half = x.shape[0]
        for name, band in (("lh", lh), ("hl", hl), ("hh", hh)):
            if band.shape != (half, half):
                raise ValueError(
                    f"inconsistent pyramid: {name} band has shape {band.shape}, expected {(half, half)}"
                )
        n = 2 * half
        y = np.empty((n, n))
        y[:half, :half] = x
        y[:half, half:] = lh
        y[half:, :half] = hl
        y[half:, half:] = hh
        w = _analysis_matrix(pyr.family, n)
        x = w.T @ y @ w
    return x


def tau(x):
    """Monotone coefficient squashing onto [0, 1]: the logistic sigmoid.

    Strictly increasing with Lipschitz constant 1/4, so it preserves
    coefficient ordering and satisfies the 1-Lipschitz requirement with
    margin.
    """
    return expit(x)


def dump_pyramid(pyr: SubbandPyramid, out_dir) -> list[Path]:
    """Write every subband as a raw grid named {level}_{band}.wph."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for j in range(1, pyr.depth + 1):
        for name, band in zip(("lh", "hl", "hh"), pyr.level(j)):
            path = out / f"{j}_{name}.wph"
            write_raw(path, band)
            written.append(path)
    path = out / f"{pyr.depth}_ll.wph"
    write_raw(path, pyr.ll)
    written.append(path)
    return written
