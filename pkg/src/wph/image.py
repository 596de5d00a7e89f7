"""Grayscale image normalization, masking, and resizing.

All functions operate on 2-D float64 arrays with intensities nominally in
[0, 1] and are pure: no shared state, safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "check_image",
    "min_max_normalize",
    "is_constant",
    "otsu_threshold",
    "otsu_mask",
    "apply_mask",
    "resize_area",
    "resize_max_side",
    "fit_to_square",
    "pad_to_square",
    "upsample_bilinear",
]

OTSU_BINS = 256


def check_image(img, min_side: int = 1) -> np.ndarray:
    """Validate and return a 2-D finite float64 array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale array, got shape {arr.shape}")
    if arr.shape[0] < min_side or arr.shape[1] < min_side:
        raise ValueError(f"image {arr.shape} smaller than minimum side {min_side}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains NaN or Inf values")
    return arr


def is_constant(img) -> bool:
    arr = np.asarray(img)
    return bool(arr.size == 0 or np.ptp(arr) == 0)


def min_max_normalize(img) -> np.ndarray:
    """Affinely map intensities to [0, 1].

    A constant image maps to all zeros rather than raising; callers that
    need to know can test with is_constant() and record it in metadata.
    """
    arr = check_image(img)
    if arr.size == 0:
        raise ValueError("cannot normalize an empty image")
    lo = arr.min()
    span = arr.max() - lo
    if span == 0:
        return np.zeros_like(arr)
    return (arr - lo) / span


def otsu_threshold(img) -> float:
    """Threshold maximizing inter-class variance over a 256-bin histogram on [0, 1].

    Returns the upper edge of the best split bin; pixels >= the returned
    value are foreground. A constant image returns 0.0 (everything is
    foreground, no separation possible).
    """
    arr = check_image(img)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("otsu_threshold expects a normalized image in [0, 1]")
    if is_constant(arr):
        return 0.0
    bins = np.minimum((arr * OTSU_BINS).astype(np.int64), OTSU_BINS - 1)
    hist = np.bincount(bins.ravel(), minlength=OTSU_BINS).astype(np.float64)
    total = hist.sum()
    centers = (np.arange(OTSU_BINS) + 0.5) / OTSU_BINS

    # Cumulative class weight/mean for splits "bins <= t" vs "bins > t".
    w0 = np.cumsum(hist)
    m0 = np.cumsum(hist * centers)
    mu_total = m0[-1]
    w1 = total - w0
    valid = (w0 > 0) & (w1 > 0)
    between = np.zeros(OTSU_BINS)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean0 = m0 / w0
        mean1 = (mu_total - m0) / w1
    between[valid] = w0[valid] * w1[valid] * (mean0[valid] - mean1[valid]) ** 2
    t = int(np.argmax(between))  # first maximizer on ties
    return (t + 1) / OTSU_BINS


def otsu_mask(img) -> np.ndarray:
    """Boolean foreground mask; all ones for a constant image."""
    arr = check_image(img)
    if is_constant(arr):
        return np.ones_like(arr, dtype=bool)
    return arr >= otsu_threshold(arr)


def apply_mask(img, mask) -> np.ndarray:
    arr = check_image(img)
    m = np.asarray(mask, dtype=bool)
    if m.shape != arr.shape:
        raise ValueError(f"mask shape {m.shape} does not match image {arr.shape}")
    return arr * m


def _overlap_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic matrix of fractional cell overlaps for area resampling.

    Output cell i covers [i*s, (i+1)*s) in input coordinates with
    s = n_in/n_out; each weight is the covered fraction of an input cell.
    Rows sum to 1, so constants pass through exactly and every output value
    is a convex combination of input values.
    """
    s = n_in / n_out
    w = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo = i * s
        hi = lo + s
        r0 = int(np.floor(lo))
        r1 = min(int(np.ceil(hi)), n_in)
        for r in range(r0, r1):
            w[i, r] = min(hi, r + 1) - max(lo, r)
    w /= s
    return w


def resize_area(img, out_h: int, out_w: int) -> np.ndarray:
    """Area-weighted (box) resampling to an arbitrary grid.

    Integral-preserving: the mean intensity is unchanged up to float
    rounding, for both down- and upsampling.
    """
    arr = check_image(img)
    if out_h < 1 or out_w < 1:
        raise ValueError("output dimensions must be positive")
    if (out_h, out_w) == arr.shape:
        return arr.copy()
    wy = _overlap_weights(arr.shape[0], out_h)
    wx = _overlap_weights(arr.shape[1], out_w)
    return wy @ arr @ wx.T


def _scaled_shape(h: int, w: int, target_long: int) -> tuple[int, int]:
    if h >= w:
        return target_long, max(2, round(w * target_long / h))
    return max(2, round(h * target_long / w)), target_long


def resize_max_side(img, max_side: int) -> np.ndarray:
    """Cap the longer side at max_side via area averaging; never upsamples."""
    arr = check_image(img)
    if max_side < 2:
        raise ValueError("max_side must be >= 2")
    h, w = arr.shape
    if max(h, w) <= max_side:
        return arr.copy()
    out_h, out_w = _scaled_shape(h, w, max_side)
    return resize_area(arr, out_h, out_w)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def pad_to_square(img, side: int) -> np.ndarray:
    """Zero-pad into the top-left corner of a side x side grid.

    side must be a power of two (the periodized transform downstream
    requires it) and at least as large as both image dimensions.
    """
    arr = check_image(img)
    if not _is_pow2(side):
        raise ValueError(f"pad side must be a power of two, got {side}")
    h, w = arr.shape
    if side < h or side < w:
        raise ValueError(f"pad side {side} smaller than image {arr.shape}")
    out = np.zeros((side, side))
    out[:h, :w] = arr
    return out


def fit_to_square(img, side: int) -> np.ndarray:
    """Aspect-preserving resize (longer side -> side, up or down) plus zero padding."""
    arr = check_image(img)
    if not _is_pow2(side):
        raise ValueError(f"target side must be a power of two, got {side}")
    h, w = arr.shape
    if max(h, w) != side:
        arr = resize_area(arr, *_scaled_shape(h, w, side))
    return pad_to_square(arr, side)


def upsample_bilinear(img, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear interpolation on pixel centers (edge-clamped)."""
    arr = check_image(img)
    in_h, in_w = arr.shape
    if out_h < 1 or out_w < 1:
        raise ValueError("output dimensions must be positive")

    def axis_coords(n_in, n_out):
        src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        src = np.clip(src, 0.0, n_in - 1.0)
        i0 = np.floor(src).astype(np.int64)
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, src - i0

    r0, r1, fy = axis_coords(in_h, out_h)
    c0, c1, fx = axis_coords(in_w, out_w)
    rows = arr[r0] * (1.0 - fy)[:, None] + arr[r1] * fy[:, None]
    return rows[:, c0] * (1.0 - fx)[None, :] + rows[:, c1] * fx[None, :]
