import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from wph.estimators import ChannelExtractor, TopologicalProbe


def tiny_extractor(**over):
    kwargs = dict(wavelet_side=32, persistence_side=32, depth=2)
    kwargs.update(over)
    return ChannelExtractor(**kwargs)


class TestChannelExtractor:
    def test_get_set_params_roundtrip(self):
        ex = tiny_extractor(family="db2", h1_pct=0.25)
        params = ex.get_params()
        assert params["family"] == "db2" and params["h1_pct"] == 0.25
        ex2 = clone(ex)
        assert ex2.get_params() == params

    def test_transform_single_image(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(size=(20, 20))
        out = tiny_extractor(mask=False).transform(img)
        assert isinstance(out, list) and len(out) == 1
        assert out[0].shape == (8, 20, 20)
        assert out[0].min() >= 0.0 and out[0].max() <= 1.0

    def test_transform_batch_and_embeddings(self):
        rng = np.random.default_rng(1)
        imgs = [rng.uniform(size=(16, 16)) for _ in range(3)]
        embs = tiny_extractor(mask=False, output="embedding").transform(imgs)
        assert embs.shape == (3, 8)
        assert embs.min() >= 0.0 and embs.max() <= 1.0

    def test_normalizes_raw_input(self):
        rng = np.random.default_rng(2)
        img = rng.uniform(10, 200, size=(16, 16))  # raw 8-bit-ish values
        out = tiny_extractor(mask=False).transform(img)
        assert out[0].max() <= 1.0

    def test_invalid_params_raise_on_fit(self):
        with pytest.raises(ValueError):
            tiny_extractor(h1_pct=0.0).fit()
        with pytest.raises(ValueError):
            tiny_extractor(output="bars").fit()

    def test_mask_changes_result(self):
        rng = np.random.default_rng(3)
        img = np.clip(rng.normal(0.8, 0.05, size=(24, 24)), 0, 1)
        # Two dark basins at distinct levels: Otsu zeroes both, so the
        # masked image really differs from the normalized one.
        img[4:10, 4:10] = 0.1
        img[15:20, 15:20] = 0.25
        with_mask = tiny_extractor(mask=True).transform(img)[0]
        without = tiny_extractor(mask=False).transform(img)[0]
        assert not np.array_equal(with_mask, without)


class TestTopologicalProbe:
    def _toy(self):
        rng = np.random.default_rng(4)
        X = np.zeros((30, 8))
        X[:, 2] = np.concatenate([rng.uniform(0, 0.3, 15), rng.uniform(0.7, 1.0, 15)])
        y = np.repeat([0, 1], 15)
        return X, y

    def test_fit_predict(self):
        X, y = self._toy()
        probe = TopologicalProbe().fit(X, y)
        assert (probe.predict(X) == y).all()
        proba = probe.predict_proba(X)
        assert proba.shape == (30, 2)
        assert np.allclose(proba.sum(axis=1), 1.0)

    def test_not_fitted_raises(self):
        with pytest.raises(NotFittedError):
            TopologicalProbe().predict(np.zeros((2, 8)))

    def test_clone_keeps_hyperparams(self):
        probe = TopologicalProbe(l2=5e-4, n_iter=100)
        probe2 = clone(probe)
        assert probe2.l2 == 5e-4 and probe2.n_iter == 100

    def test_sklearn_attributes(self):
        X, y = self._toy()
        probe = TopologicalProbe().fit(X, y)
        assert probe.coef_.shape == (1, 8)
        assert probe.intercept_.shape == (1,)
        assert probe.classes_.tolist() == [0, 1]

    def test_score_mixin(self):
        X, y = self._toy()
        assert TopologicalProbe().fit(X, y).score(X, y) == 1.0
