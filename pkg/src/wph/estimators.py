"""Scikit-learn style wrappers so the pipeline composes with the ecosystem."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import analysis
from .image import apply_mask, check_image, min_max_normalize, otsu_mask
from .vectorize import GatingParams, build_channel_stack

__all__ = ["ChannelExtractor", "TopologicalProbe"]


def _iter_images(X):
    """Accept one 2-D array or an iterable of them."""
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [X]
    return list(X)


class ChannelExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer: grayscale image -> topological channel maps.

    transform returns a list of (8, H, W) arrays, or an (n, 8) embedding
    matrix when output="embedding". Inputs are normalized (and Otsu
    masked unless disabled) before channel construction.
    """

    def __init__(
        self,
        family: str = "haar",
        depth: int = 2,
        h1_pct: float = 0.5,
        epsilon: float = 1e-6,
        persistence_side: int = 96,
        wavelet_side: int = 256,
        mask: bool = True,
        h1_order: str = "top",
        diagram_source: str = "image",
        output: str = "channels",
    ):
        self.family = family
        self.depth = depth
        self.h1_pct = h1_pct
        self.epsilon = epsilon
        self.persistence_side = persistence_side
        self.wavelet_side = wavelet_side
        self.mask = mask
        self.h1_order = h1_order
        self.diagram_source = diagram_source
        self.output = output

    def _params(self) -> GatingParams:
        return GatingParams(
            family=self.family,
            depth=self.depth,
            h1_pct=self.h1_pct,
            epsilon=self.epsilon,
            persistence_side=self.persistence_side,
            wavelet_side=self.wavelet_side,
            h1_order=self.h1_order,
            diagram_source=self.diagram_source,
        )

    def fit(self, X=None, y=None):
        if self.output not in ("channels", "embedding"):
            raise ValueError(f"output must be 'channels' or 'embedding', got {self.output!r}")
        self._params()  # validate
        return self

    def preprocess(self, img):
        """Normalize to [0, 1] and (optionally) zero out the Otsu background."""
        img = min_max_normalize(check_image(img, min_side=2))
        if self.mask:
            img = apply_mask(img, otsu_mask(img))
        return img

    def transform_one(self, img):
        return build_channel_stack(self.preprocess(img), self._params())

    def transform(self, X):
        self.fit()
        stacks = [self.transform_one(img) for img in _iter_images(X)]
        if self.output == "embedding":
            return np.stack([analysis.pool_embedding(s) for s in stacks])
        return [s.channels for s in stacks]


class TopologicalProbe(BaseEstimator, ClassifierMixin):
    """Logistic linear probe on pooled 8-vector embeddings."""

    def __init__(self, l2: float = analysis.PROBE_L2, step: float = analysis.PROBE_STEP, n_iter: int = analysis.PROBE_ITERS):
        self.l2 = l2
        self.step = step
        self.n_iter = n_iter

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.model_ = analysis.fit_probe(X, y, l2=self.l2, step=self.step, n_iter=self.n_iter)
        self.coef_ = self.model_.w[None, :]
        self.intercept_ = np.array([self.model_.b])
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("TopologicalProbe is not fitted")

    def decision_function(self, X):
        self._check_fitted()
        return self.model_.decision(np.asarray(X, dtype=np.float64))

    def predict_proba(self, X):
        self._check_fitted()
        p1 = self.model_.predict_proba(np.asarray(X, dtype=np.float64))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.decision_function(X) >= 0.0).astype(np.int64)
