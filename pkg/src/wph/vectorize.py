"""Gated wavelet-persistence channel maps.

A diagram bar (b, d) deposits mass at every location whose (squashed)
coefficient value lies in [b, d), weighted by the quadratic bump
(psi-b)(d-psi)/((d-b)+eps); summing over all bars of a diagram gives one
spatial map per subband. Six such maps (level-J LH/HL/HH crossed with the
filtered H0 and truncated H1 diagrams) plus two maps gated directly on
the image intensities form the 8-channel stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .image import (
    check_image,
    fit_to_square,
    min_max_normalize,
    resize_max_side,
    upsample_bilinear,
)
from .persistence import Diagram, compute_diagram, filter_h0, truncate_h1
from .wavelet import FAMILIES, VALID_DEPTHS, dwt2, tau

__all__ = [
    "CHANNEL_NAMES",
    "GatingParams",
    "ChannelStack",
    "gate",
    "subband_map",
    "stacked_subband_maps",
    "build_channel_stack",
    "concat_input",
]

CHANNEL_NAMES = (
    "lh_h0",
    "hl_h0",
    "hh_h0",
    "lh_h1",
    "hl_h1",
    "hh_h1",
    "image_h0",
    "image_h1",
)

DEFAULT_EPSILON = 1e-6
DEFAULT_PERSISTENCE_SIDE = 96
DEFAULT_WAVELET_SIDE = 256


@dataclass(frozen=True)
class GatingParams:
    """Channel-construction parameters; validated on creation."""

    family: str = "haar"
    depth: int = 2
    h1_pct: float = 0.5
    epsilon: float = DEFAULT_EPSILON
    persistence_side: int = DEFAULT_PERSISTENCE_SIDE
    wavelet_side: int = DEFAULT_WAVELET_SIDE
    h1_order: str = "top"
    diagram_source: str = "image"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown wavelet family {self.family!r}")
        if self.depth not in VALID_DEPTHS:
            raise ValueError(f"depth must be one of {VALID_DEPTHS}, got {self.depth}")
        if not 0.0 < self.h1_pct <= 1.0:
            raise ValueError(f"h1_pct must be in (0, 1], got {self.h1_pct}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.persistence_side < 8:
            raise ValueError(f"persistence_side must be >= 8, got {self.persistence_side}")
        side = self.wavelet_side
        if side < 2 or side & (side - 1):
            raise ValueError(f"wavelet_side must be a power of two, got {side}")
        if self.h1_order not in ("top", "lowest"):
            raise ValueError(f"h1_order must be 'top' or 'lowest', got {self.h1_order!r}")
        if self.diagram_source not in ("image", "wavelet"):
            raise ValueError(f"diagram_source must be 'image' or 'wavelet', got {self.diagram_source!r}")

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "depth": self.depth,
            "h1_pct": self.h1_pct,
            "epsilon": self.epsilon,
            "persistence_side": self.persistence_side,
            "wavelet_side": self.wavelet_side,
            "h1_order": self.h1_order,
            "diagram_source": self.diagram_source,
        }


def gate(psi_tilde, b: float, d: float, epsilon: float):
    """Quadratic bump (psi-b)(d-psi)/((d-b)+eps) on [b, d), zero outside.

    Continuously extends to 0 at b = d. epsilon = 0 is accepted here (the
    closed form stays finite off the diagonal); pipeline parameters
    enforce epsilon > 0 via GatingParams.
    """
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if not 0.0 <= b <= d <= 1.0:
        raise ValueError(f"expected 0 <= b <= d <= 1, got b={b}, d={d}")
    psi = np.asarray(psi_tilde, dtype=np.float64)
    den = (d - b) + epsilon
    if den == 0.0:
        out = np.zeros_like(psi)
        return float(out) if np.ndim(psi_tilde) == 0 else out
    inside = (psi >= b) & (psi < d)
    out = np.where(inside, (psi - b) * (d - psi) / den, 0.0)
    return float(out) if np.ndim(psi_tilde) == 0 else out


def subband_map(subband, diag, epsilon: float) -> np.ndarray:
    """Sum of gates over all diagram bars, evaluated pointwise on a grid.

    The empty diagram yields the zero grid. Bars are accumulated in
    canonical (birth, death) order so the float summation is reproducible.
    """
    psi = np.asarray(subband, dtype=np.float64)
    pairs = diag.pairs() if isinstance(diag, Diagram) else np.asarray(diag, dtype=np.float64).reshape(-1, 2)
    out = np.zeros_like(psi)
    if pairs.shape[0] == 0:
        return out
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    for b, d in pairs[order]:
        out += gate(psi, float(b), float(d), epsilon)
    return out


def stacked_subband_maps(subbands, diag, epsilon: float) -> list[np.ndarray]:
    """Per-subband maps for one diagram, pre-rescaling (the stability-bound
    object: stacking these is what the Lipschitz constants refer to)."""
    return [subband_map(s, diag, epsilon) for s in subbands]


def _rescale_unit(grid: np.ndarray) -> tuple[np.ndarray, float, float]:
    lo = float(grid.min())
    hi = float(grid.max())
    if hi == lo:
        return np.zeros_like(grid), lo, hi
    return (grid - lo) / (hi - lo), lo, hi


@dataclass(frozen=True)
class ChannelStack:
    """The 8-channel map plus everything needed to reproduce it."""

    channels: np.ndarray  # (8, H, W), each channel in [0, 1]
    params: GatingParams
    rescale_min: np.ndarray  # (8,) pre-rescale minima
    rescale_max: np.ndarray  # (8,) pre-rescale maxima
    diagram: Diagram  # unfiltered diagram of the persistence grid
    channel_names: tuple[str, ...] = CHANNEL_NAMES
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 3 or ch.shape[0] != len(CHANNEL_NAMES):
            raise ValueError(f"expected ({len(CHANNEL_NAMES)}, H, W) channels, got {ch.shape}")
        if ch.min() < 0.0 or ch.max() > 1.0:
            raise ValueError("channel values must lie in [0, 1] after rescaling")
        object.__setattr__(self, "channels", ch)

    @property
    def shape(self) -> tuple[int, int]:
        return self.channels.shape[1:]


def diagrams_for_channels(img, params: GatingParams) -> tuple[Diagram, Diagram, Diagram]:
    """(full, filtered-H0, truncated-H1) diagrams for a normalized image."""
    arr = check_image(img, min_side=2)
    if params.diagram_source == "image":
        grid = resize_max_side(arr, params.persistence_side)
    else:
        # Alternate reading: persistence on the coarse approximation band.
        pyr = dwt2(fit_to_square(arr, params.wavelet_side), params.family, params.depth)
        grid = min_max_normalize(pyr.ll)
        grid = resize_max_side(grid, params.persistence_side)
    diag = compute_diagram(grid)
    d0 = filter_h0(diag).in_dim(0)
    d1 = truncate_h1(diag, params.h1_pct, params.h1_order).in_dim(1)
    return diag, d0, d1


def build_channel_stack(img, params: GatingParams | None = None) -> ChannelStack:
    """Assemble the 8-channel topological map of a normalized image.

    Channels 1-3: level-J (LH, HL, HH) maps under the filtered H0 diagram.
    Channels 4-6: the same subbands under the truncated H1 diagram.
    Channels 7-8: gates evaluated directly on the image intensities
    (identity squashing; intensities already live in [0, 1]) with the H0
    and H1 diagrams. Every channel is min-max rescaled to [0, 1]
    (constant maps become zeros) and bilinearly upsampled to the input
    resolution.
    """
    params = params or GatingParams()
    arr = check_image(img, min_side=2)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("build_channel_stack expects a normalized image in [0, 1]")
    h, w = arr.shape

    diag, d0, d1 = diagrams_for_channels(arr, params)

    pyr = dwt2(fit_to_square(arr, params.wavelet_side), params.family, params.depth)
    bands = [tau(band) for band in pyr.level(params.depth)]

    raw_maps = stacked_subband_maps(bands, d0, params.epsilon)
    raw_maps += stacked_subband_maps(bands, d1, params.epsilon)
    raw_maps.append(subband_map(arr, d0, params.epsilon))
    raw_maps.append(subband_map(arr, d1, params.epsilon))

    channels = np.empty((len(CHANNEL_NAMES), h, w))
    lo = np.empty(len(CHANNEL_NAMES))
    hi = np.empty(len(CHANNEL_NAMES))
    for k, grid in enumerate(raw_maps):
        scaled, lo[k], hi[k] = _rescale_unit(grid)
        channels[k] = scaled if scaled.shape == (h, w) else upsample_bilinear(scaled, h, w)

    return ChannelStack(
        channels=channels,
        params=params,
        rescale_min=lo,
        rescale_max=hi,
        diagram=diag,
    )


def concat_input(img, stack: ChannelStack) -> np.ndarray:
    """9-channel tensor [image, channels...]; channel 0 is the image itself."""
    arr = check_image(img)
    if arr.shape != stack.shape:
        raise ValueError(f"image shape {arr.shape} does not match channels {stack.shape}")
    return np.concatenate([arr[None, :, :], stack.channels], axis=0)
