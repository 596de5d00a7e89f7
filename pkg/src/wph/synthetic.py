"""Seeded synthetic grayscale corpora with controlled topology.

Images are a bright background carrying dark Gaussian spots (each spot
births one H0 component in the sublevel filtration) and dark rings with
brighter interiors (each ring births one H1 loop). Class 1 images carry
many spots, class 0 few, so H0 mass separates the classes; this is the
corpus used for probe/ablation checks.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .container import save_image

__all__ = [
    "blob_image",
    "smooth_noise_image",
    "make_corpus",
    "read_labels",
    "LABELS_FILE",
]

LABELS_FILE = "labels.tsv"


def blob_image(
    rng: np.random.Generator,
    height: int = 96,
    width: int = 96,
    n_spots: int = 5,
    n_rings: int = 1,
    noise: float = 0.01,
    background: float = 0.9,
) -> np.ndarray:
    """One synthetic image in [0, 1] with the requested topology."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.full((height, width), background)

    margin = min(4.0, height / 4, width / 4)
    for _ in range(n_spots):
        cy = rng.uniform(margin, height - margin)
        cx = rng.uniform(margin, width - margin)
        sigma = rng.uniform(1.5, 4.0)
        depth = rng.uniform(0.4, 0.8)
        img -= depth * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma**2))

    short = min(height, width)
    for _ in range(n_rings):
        cy = rng.uniform(height * 0.25, height * 0.75)
        cx = rng.uniform(width * 0.25, width * 0.75)
        radius = rng.uniform(short / 8, short / 5)
        r = np.sqrt((yy - cy) ** 2 + (xx - cx) ** 2)
        img -= 0.6 * np.exp(-((r - radius) ** 2) / (2 * 1.5**2))

    if noise > 0:
        img += rng.normal(0.0, noise, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def smooth_noise_image(rng: np.random.Generator, height: int, width: int, smooth: float = 2.0) -> np.ndarray:
    """Gaussian-smoothed white noise rescaled to [0, 1].

    Smoothing keeps critical-point (and so diagram) counts moderate,
    which the exact-matching stability checks rely on for runtime.
    """
    raw = rng.standard_normal((height, width))
    if smooth > 0:
        radius = int(np.ceil(3 * smooth))
        t = np.arange(-radius, radius + 1)
        kernel = np.exp(-(t**2) / (2 * smooth**2))
        kernel /= kernel.sum()
        pad = np.pad(raw, radius, mode="wrap")
        raw = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, pad)
        raw = np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="valid"), 0, raw)
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return np.zeros((height, width))
    return (raw - lo) / (hi - lo)


def make_corpus(
    out_dir,
    n_patients: int = 12,
    views: int = 2,
    seed: int = 0,
    height: int = 96,
    width: int = 96,
    image_format: str = "png",
    spots_negative: tuple[int, int] = (2, 4),
    spots_positive: tuple[int, int] = (9, 14),
) -> list[dict]:
    """Write a labeled two-class corpus plus labels.tsv; returns the rows.

    Even-indexed patients are class 0 (few spots), odd class 1 (many
    spots), so both classes are always present.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    for p in range(n_patients):
        label = p % 2
        lo, hi = spots_positive if label else spots_negative
        pid = f"patient{p:03d}"
        for v in range(views):
            n_spots = int(rng.integers(lo, hi + 1))
            n_rings = int(rng.integers(1, 4)) if label else int(rng.integers(0, 2))
            img = blob_image(rng, height, width, n_spots=n_spots, n_rings=n_rings)
            fname = f"{pid}_view{v}.{image_format}"
            save_image(out / fname, img)
            rows.append({"file": fname, "patient_id": pid, "label": label, "n_spots": n_spots})
    with open(out / LABELS_FILE, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(["file", "patient_id", "label", "n_spots"])
        for row in rows:
            writer.writerow([row["file"], row["patient_id"], row["label"], row["n_spots"]])
    return rows


def read_labels(corpus_dir) -> dict[str, dict]:
    """file -> {patient_id, label} from labels.tsv; empty if absent."""
    path = Path(corpus_dir) / LABELS_FILE
    if not path.exists():
        return {}
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh, delimiter="\t"):
            out[row["file"]] = {
                "patient_id": row["patient_id"],
                "label": int(row["label"]) if row.get("label", "") != "" else None,
            }
    return out
