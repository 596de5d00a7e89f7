import numpy as np
import pytest

from wph.container import load_image, read_raw, save_image, write_raw
from wph.image import (
    apply_mask,
    fit_to_square,
    is_constant,
    min_max_normalize,
    otsu_mask,
    otsu_threshold,
    pad_to_square,
    resize_area,
    resize_max_side,
    upsample_bilinear,
)


class TestNormalize:
    def test_affine_map(self):
        out = min_max_normalize(np.array([[2.0, 4.0], [6.0, 6.0]]))
        assert np.allclose(out, [[0.0, 0.5], [1.0, 1.0]])

    def test_constant_goes_to_zero(self):
        out = min_max_normalize(np.full((3, 3), 5.0))
        assert np.array_equal(out, np.zeros((3, 3)))

    def test_eight_bit_ramp(self):
        ramp = np.tile(np.arange(256.0), (2, 1))
        out = min_max_normalize(ramp)
        assert np.allclose(out, ramp / 255.0)

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(-3, 7, size=(9, 11))
        once = min_max_normalize(img)
        assert np.array_equal(min_max_normalize(once), once)

    def test_rejects_nan(self):
        bad = np.ones((3, 3))
        bad[1, 1] = np.nan
        with pytest.raises(ValueError):
            min_max_normalize(bad)


class TestOtsu:
    def test_bimodal_halves(self):
        img = np.full((10, 10), 0.1)
        img[:, 5:] = 0.9
        mask = otsu_mask(img)
        assert np.array_equal(mask[:, 5:], np.ones((10, 5), dtype=bool))
        assert np.array_equal(mask[:, :5], np.zeros((10, 5), dtype=bool))

    def test_constant_all_ones(self):
        assert otsu_mask(np.full((4, 6), 0.4)).all()

    @staticmethod
    def _between_class_scan(img):
        # Independent oracle: naive scan over all 256 split points.
        bins = np.minimum((img * 256).astype(int), 255).ravel()
        centers = (np.arange(256) + 0.5) / 256
        best_t, best_v = 0, -1.0
        for t in range(256):
            in0 = bins <= t
            n0, n1 = in0.sum(), (~in0).sum()
            if n0 == 0 or n1 == 0:
                continue
            m0 = centers[bins[in0]].mean()
            m1 = centers[bins[~in0]].mean()
            v = n0 * n1 * (m0 - m1) ** 2
            if v > best_v:
                best_v, best_t = v, t
        return (best_t + 1) / 256

    def test_random_bimodal_matches_bruteforce(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            a = rng.normal(0.2, 0.05, size=(24, 24))
            b = rng.normal(0.8, 0.05, size=(24, 24))
            pick = rng.uniform(size=(24, 24)) < 0.5
            img = np.clip(np.where(pick, a, b), 0.0, 1.0)
            t = otsu_threshold(img)
            assert t == self._between_class_scan(img)
            assert 0.3 < t < 0.7

    def test_apply_mask_zeroes_background(self):
        img = np.full((4, 4), 0.7)
        mask = np.zeros((4, 4), dtype=bool)
        mask[0, 0] = True
        out = apply_mask(img, mask)
        assert out[0, 0] == 0.7 and out[1:].sum() == 0


class TestResize:
    def test_exact_halving(self):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(192, 96))
        out = resize_max_side(img, 96)
        assert out.shape == (96, 48)
        # box filter over 2x2 blocks
        blocks = img.reshape(96, 2, 48, 2).mean(axis=(1, 3))
        assert np.allclose(out, blocks, atol=1e-12)

    def test_identity_when_within_bound(self):
        img = np.random.default_rng(2).uniform(size=(96, 96))
        assert np.array_equal(resize_max_side(img, 96), img)

    def test_constant_preserved(self):
        out = resize_max_side(np.full((100, 50), 0.7), 96)
        assert out.shape == (96, 48)
        assert np.allclose(out, 0.7, atol=1e-12)

    def test_values_stay_in_hull(self):
        rng = np.random.default_rng(3)
        img = rng.uniform(0.2, 0.6, size=(37, 53))
        out = resize_max_side(img, 17)
        assert out.min() >= img.min() - 1e-12
        assert out.max() <= img.max() + 1e-12

    def test_mean_preserved_up_and_down(self):
        rng = np.random.default_rng(4)
        img = rng.uniform(size=(30, 20))
        for shape in ((90, 61), (7, 5)):
            out = resize_area(img, *shape)
            assert abs(out.mean() - img.mean()) < 1e-12


class TestPad:
    def test_zero_padding_right(self):
        img = np.ones((4, 2))
        out = pad_to_square(img, 4)
        assert out.shape == (4, 4)
        assert out[:, :2].sum() == 8 and out[:, 2:].sum() == 0

    def test_identity_square(self):
        img = np.random.default_rng(5).uniform(size=(8, 8))
        assert np.array_equal(pad_to_square(img, 8), img)

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            pad_to_square(np.ones((4, 4)), 6)

    def test_fit_resizes_then_pads(self):
        rng = np.random.default_rng(6)
        img = rng.uniform(size=(96, 48))
        out = fit_to_square(img, 256)
        assert out.shape == (256, 256)
        content = out[:256, :128]
        assert abs(content.mean() - img.mean()) < 1e-6
        assert out[:, 128:].sum() == 0

    def test_content_region_equals_resized_input(self):
        rng = np.random.default_rng(7)
        img = rng.uniform(size=(30, 17))
        out = fit_to_square(img, 64)
        expected = resize_area(img, 64, round(17 * 64 / 30))
        assert np.array_equal(out[:64, : expected.shape[1]], expected)


class TestUpsample:
    def test_constant(self):
        out = upsample_bilinear(np.full((4, 4), 0.3), 11, 9)
        assert np.allclose(out, 0.3)

    def test_range_preserved(self):
        rng = np.random.default_rng(8)
        img = rng.uniform(size=(6, 6))
        out = upsample_bilinear(img, 50, 70)
        assert out.min() >= img.min() - 1e-12 and out.max() <= img.max() + 1e-12

    def test_identity_same_size(self):
        img = np.random.default_rng(9).uniform(size=(5, 7))
        assert np.allclose(upsample_bilinear(img, 5, 7), img)


class TestContainer:
    def test_raw_roundtrip(self, tmp_path):
        rng = np.random.default_rng(10)
        img = rng.uniform(size=(13, 7)).astype(np.float32).astype(np.float64)
        path = tmp_path / "grid.wph"
        write_raw(path, img)
        assert path.stat().st_size == 16 + 13 * 7 * 4
        back = read_raw(path)
        assert np.array_equal(back, img)

    def test_raw_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.wph"
        path.write_bytes(b"NOPE" + b"\0" * 28)
        with pytest.raises(ValueError, match="magic"):
            read_raw(path)

    @pytest.mark.parametrize("suffix,bits,tol", [(".png", 8, 1 / 255), (".png", 16, 1 / 65535), (".pgm", 16, 1 / 65535)])
    def test_image_roundtrip(self, tmp_path, suffix, bits, tol):
        rng = np.random.default_rng(11)
        img = rng.uniform(size=(20, 30))
        path = tmp_path / f"img{suffix}"
        save_image(path, img, bitdepth=bits)
        back = load_image(path)
        assert back.shape == img.shape
        assert np.abs(back - img).max() <= tol

    def test_pgm_ascii(self, tmp_path):
        path = tmp_path / "a.pgm"
        path.write_text("P2\n# comment\n3 2\n255\n0 128 255\n255 128 0\n")
        img = load_image(path)
        assert img.shape == (2, 3)
        assert img[0, 2] == 1.0 and img[1, 2] == 0.0

    def test_constant_flag(self):
        assert is_constant(np.full((3, 3), 0.5))
        assert not is_constant(np.eye(3))
