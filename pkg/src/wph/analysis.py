"""Pooled embeddings, patient aggregation, linear probe, and evaluation.

The probe is a deliberately fixed logistic regression: full-batch
gradient descent, zero initialization, 5000 iterations at step 0.1 with
an L2 penalty of 1e-4 on the weights (not the bias). Determinism is the
point; there is no tuning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

__all__ = [
    "EmbeddingCloud",
    "ProbeModel",
    "BootstrapResult",
    "pool_embedding",
    "aggregate_patient",
    "fit_probe",
    "probe_loss_grad",
    "roc_auc",
    "youden_threshold",
    "bootstrap_ci",
]

log = logging.getLogger(__name__)

N_CHANNELS = 8

PROBE_L2 = 1e-4
PROBE_STEP = 0.1
PROBE_ITERS = 5000

UNKNOWN_LABEL = -1


def pool_embedding(stack_or_channels) -> np.ndarray:
    """Spatial mean of each channel, in declared channel order."""
    channels = getattr(stack_or_channels, "channels", stack_or_channels)
    arr = np.asarray(channels, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError(f"expected (C, H, W) channels, got shape {arr.shape}")
    return arr.reshape(arr.shape[0], -1).mean(axis=1)


@dataclass(frozen=True)
class EmbeddingCloud:
    """Per-patient pooled vectors with labels (UNKNOWN_LABEL if absent)."""

    patient_ids: tuple[str, ...]
    z: np.ndarray  # (n, 8)
    labels: np.ndarray  # (n,) in {0, 1, UNKNOWN_LABEL}

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.float64).reshape(len(self.patient_ids), -1)
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape[0] != z.shape[0]:
            raise ValueError("labels and embeddings disagree in length")
        if len(set(self.patient_ids)) != len(self.patient_ids):
            raise ValueError("patient ids must be unique after aggregation")
        if z.size and (z.min() < 0.0 or z.max() > 1.0):
            # Pooled means of rescaled channels always land in [0, 1].
            raise ValueError("embedding components must lie in [0, 1]")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.z.shape[0]

    def labeled(self) -> "EmbeddingCloud":
        keep = self.labels != UNKNOWN_LABEL
        ids = tuple(pid for pid, k in zip(self.patient_ids, keep) if k)
        return EmbeddingCloud(ids, self.z[keep], self.labels[keep])


def aggregate_patient(patient_ids, values, mode: str = "mean"):
    """Collapse per-image values to one value per patient.

    values may be scalars (scores) or vectors (embeddings); mode is
    "mean" or "max" (elementwise for vectors). Patients come back in
    sorted id order for determinism.
    """
    if mode not in ("mean", "max"):
        raise ValueError(f"aggregation mode must be 'mean' or 'max', got {mode!r}")
    ids = [str(p) for p in patient_ids]
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape[0] != len(ids):
        raise ValueError("patient_ids and values disagree in length")
    groups: dict[str, list[int]] = {}
    for i, pid in enumerate(ids):
        groups.setdefault(pid, []).append(i)
    out_ids = sorted(groups)
    agg = np.empty((len(out_ids),) + arr.shape[1:])
    for k, pid in enumerate(out_ids):
        block = arr[groups[pid]]
        agg[k] = block.mean(axis=0) if mode == "mean" else block.max(axis=0)
    return out_ids, agg


@dataclass(frozen=True)
class ProbeModel:
    w: np.ndarray
    b: float
    l2: float = PROBE_L2

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w + self.b

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision(X))

    def save(self, path) -> None:
        """10-line plain text: 8 weights, bias, l2."""
        lines = [repr(float(v)) for v in self.w] + [repr(float(self.b)), repr(float(self.l2))]
        Path(path).write_text("".join(line + "\n" for line in lines))

    @staticmethod
    def load(path) -> "ProbeModel":
        vals = [float(line) for line in Path(path).read_text().split()]
        if len(vals) != N_CHANNELS + 2:
            raise ValueError(f"probe file must hold {N_CHANNELS + 2} numbers, got {len(vals)}")
        return ProbeModel(np.array(vals[:N_CHANNELS]), vals[N_CHANNELS], vals[N_CHANNELS + 1])


def probe_loss_grad(w, b, X, y, l2: float = PROBE_L2):
    """Mean logistic loss with (l2/2)||w||^2, and its exact gradient."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    z = X @ w + b
    # log(1 + exp(-s*z)) with s = +-1, computed stably.
    s = 2.0 * y - 1.0
    loss = float(np.mean(np.logaddexp(0.0, -s * z)) + 0.5 * l2 * np.dot(w, w))
    p = expit(z)
    resid = p - y
    gw = X.T @ resid / X.shape[0] + l2 * w
    gb = float(resid.mean())
    return loss, gw, gb


def fit_probe(X, y, l2: float = PROBE_L2, step: float = PROBE_STEP, n_iter: int = PROBE_ITERS) -> ProbeModel:
    """Deterministic full-batch gradient descent from zero initialization."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"bad probe training shapes {X.shape}, {y.shape}")
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("probe training needs both classes present")
    if not np.all(np.isin(classes, (0, 1))):
        raise ValueError(f"labels must be 0/1, got {classes}")

    w = np.zeros(X.shape[1])
    b = 0.0
    loss0, _, _ = probe_loss_grad(w, b, X, y, l2)
    for _ in range(n_iter):
        _, gw, gb = probe_loss_grad(w, b, X, y, l2)
        w -= step * gw
        b -= step * gb
    loss1, _, _ = probe_loss_grad(w, b, X, y, l2)
    if not np.isfinite(loss1) or loss1 >= loss0:
        raise RuntimeError(f"probe training failed to decrease the loss ({loss0} -> {loss1})")
    return ProbeModel(w, b, l2)


def roc_auc(scores, labels) -> float:
    """Rank-based (Mann-Whitney) AUC; ties count one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes present")
    ranks = rankdata(s)  # average ranks on ties
    pos_rank_sum = float(ranks[y == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _threshold_candidates(scores: np.ndarray) -> np.ndarray:
    distinct = np.unique(scores)
    if distinct.size == 1:
        return distinct  # degenerate: the single midpoint candidate
    return (distinct[:-1] + distinct[1:]) / 2.0


def youden_threshold(scores, labels) -> float:
    """Smallest midpoint threshold maximizing sensitivity + specificity - 1.

    A score is called positive when it is >= the threshold.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if (y == 1).sum() == 0 or (y == 0).sum() == 0:
        raise ValueError("youden_threshold needs both classes present")
    best_t = None
    best_j = -np.inf
    for t in _threshold_candidates(s):
        pred = s >= t
        sens = float(pred[y == 1].mean())
        spec = float((~pred)[y == 0].mean())
        j = sens + spec - 1.0
        if j > best_j:
            best_j, best_t = j, float(t)
    return best_t


@dataclass(frozen=True)
class BootstrapResult:
    low: float
    high: float
    mean: float
    n_used: int
    n_skipped: int

    def __iter__(self):
        return iter((self.low, self.high, self.mean))


def bootstrap_ci(scores, labels, statistic, n_boot: int, seed: int) -> BootstrapResult:
    """Patient-wise percentile bootstrap (2.5/97.5).

    Each iteration resamples patients with replacement using its own
    derived rng (seed + iteration), so results do not depend on execution
    order. Resamples that lose a class are skipped and counted.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if n_boot < 1:
        raise ValueError(f"n_boot must be >= 1, got {n_boot}")
    n = s.shape[0]
    vals = []
    skipped = 0
    for it in range(n_boot):
        rng = np.random.default_rng(seed + it)
        idx = rng.integers(0, n, size=n)
        yb = y[idx]
        if yb.min() == yb.max():
            skipped += 1
            continue
        vals.append(statistic(s[idx], yb))
    if not vals:
        raise ValueError(f"all {n_boot} bootstrap resamples were single-class")
    arr = np.asarray(vals, dtype=np.float64)
    low, high = np.percentile(arr, [2.5, 97.5])
    if skipped:
        log.info("bootstrap skipped %d/%d single-class resamples", skipped, n_boot)
    return BootstrapResult(float(low), float(high), float(arr.mean()), len(vals), skipped)
