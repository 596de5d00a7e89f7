import numpy as np
import pytest

from wph.persistence import (
    Diagram,
    betti_curve,
    compute_diagram,
    dump_diagram_tsv,
    filter_h0,
    parse_diagram_tsv,
    truncate_h1,
)
from wph.verify import betti_numbers_bruteforce


def bars_of(diag):
    d = diag.canonical()
    return [
        (int(d.dims[i]), float(d.births[i]), float(d.deaths[i]), bool(d.capped[i]))
        for i in range(len(d))
    ]


class TestComputeDiagram:
    def test_constant_image(self):
        diag = compute_diagram(np.full((5, 5), 0.3))
        assert bars_of(diag) == [(0, 0.3, 1.0, True)]

    def test_dark_ring_bright_center(self):
        img = np.array(
            [
                [0.1, 0.1, 0.1],
                [0.1, 0.9, 0.1],
                [0.1, 0.1, 0.1],
            ]
        )
        diag = compute_diagram(img)
        assert bars_of(diag) == [(0, 0.1, 1.0, True), (1, 0.1, 0.9, False)]

    def test_two_minima_over_ridge(self):
        img = np.array(
            [
                [0.0, 0.8, 0.2],
                [0.0, 0.8, 0.2],
                [0.0, 0.8, 0.2],
            ]
        )
        diag = compute_diagram(img)
        assert bars_of(diag) == [(0, 0.0, 1.0, True), (0, 0.2, 0.8, False)]

    def test_rejects_tiny_or_out_of_range(self):
        with pytest.raises(ValueError):
            compute_diagram(np.ones((1, 5)))
        with pytest.raises(ValueError):
            compute_diagram(np.full((3, 3), 1.5))

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        img = np.round(rng.uniform(size=(20, 20)) * 16) / 16
        a = compute_diagram(img)
        b = compute_diagram(img.copy())
        assert bars_of(a) == bars_of(b)

    def test_betti_curves_match_bruteforce(self):
        rng = np.random.default_rng(1)
        for trial in range(25):
            h = int(rng.integers(2, 13))
            w = int(rng.integers(2, 13))
            img = rng.uniform(size=(h, w))
            if trial % 2:
                img = np.round(img * 6) / 6  # ties stress determinism
            diag = compute_diagram(img)
            thresholds = np.unique(img)
            c0 = betti_curve(diag, 0, thresholds)
            c1 = betti_curve(diag, 1, thresholds)
            for i, delta in enumerate(thresholds):
                b0, b1 = betti_numbers_bruteforce(img, float(delta))
                assert (b0, b1) == (c0[i], c1[i]), f"mismatch at delta={delta}"

    def test_all_values_attained_by_pixels(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            img = rng.uniform(size=(10, 10))
            diag = compute_diagram(img)
            attained = set(img.ravel().tolist()) | {1.0}
            assert set(diag.births.tolist()) <= attained
            assert set(diag.deaths.tolist()) <= attained

    def test_essential_class_unique_and_capped(self):
        rng = np.random.default_rng(2)
        img = rng.uniform(0.0, 0.99, size=(16, 16))
        diag = compute_diagram(img)
        capped = diag.capped.nonzero()[0]
        assert len(capped) == 1
        assert diag.dims[capped[0]] == 0
        assert diag.deaths[capped[0]] == 1.0
        assert diag.births[capped[0]] == img.min()


class TestFilterH0:
    def test_only_dominant_bar(self):
        diag = Diagram.from_bars([(0.0, 1.0, 0, True)])
        assert len(filter_h0(diag)) == 0

    def test_removes_capped_keeps_finite(self):
        diag = Diagram.from_bars([(0.0, 1.0, 0, True), (0.2, 0.8, 0)])
        out = filter_h0(diag)
        assert bars_of(out) == [(0, 0.2, 0.8, False)]

    def test_empty_passthrough(self):
        assert len(filter_h0(Diagram.empty())) == 0

    def test_h1_untouched(self):
        diag = Diagram.from_bars([(0.0, 1.0, 0, True), (0.1, 0.9, 1), (0.3, 0.5, 1)])
        out = filter_h0(diag)
        assert bars_of(out) == [(1, 0.1, 0.9, False), (1, 0.3, 0.5, False)]

    def test_longest_finite_removed_when_no_cap(self):
        diag = Diagram.from_bars([(0.1, 0.9, 0), (0.2, 0.4, 0)])
        out = filter_h0(diag)
        assert bars_of(out) == [(0, 0.2, 0.4, False)]


class TestTruncateH1:
    def test_ceiling_rule(self):
        diag = Diagram.from_bars(
            [(0.0, 0.5, 1), (0.1, 0.4, 1), (0.2, 0.4, 1), (0.3, 0.4, 1)]
        )
        out = truncate_h1(diag, 0.25)
        assert bars_of(out) == [(1, 0.0, 0.5, False)]

    def test_full_retention_identity(self):
        diag = Diagram.from_bars([(0.0, 0.5, 1), (0.1, 0.2, 1), (0.4, 1.0, 0)])
        assert bars_of(truncate_h1(diag, 1.0)) == bars_of(diag)

    def test_empty_h1(self):
        diag = Diagram.from_bars([(0.0, 1.0, 0, True)])
        assert bars_of(truncate_h1(diag, 0.5)) == bars_of(diag)

    def test_monotone_inclusion(self):
        rng = np.random.default_rng(3)
        b = rng.uniform(0, 0.5, size=10)
        d = b + rng.uniform(0.01, 0.5, size=10)
        diag = Diagram.from_bars([(bi, di, 1) for bi, di in zip(b, d)])
        kept = {}
        for pct in (0.1, 0.3, 0.5, 0.8, 1.0):
            kept[pct] = set(bars_of(truncate_h1(diag, pct)))
        pcts = sorted(kept)
        for lo, hi in zip(pcts, pcts[1:]):
            assert kept[lo] <= kept[hi]

    def test_lowest_order_flag(self):
        diag = Diagram.from_bars([(0.0, 0.9, 1), (0.1, 0.2, 1)])
        top = truncate_h1(diag, 0.5, order="top")
        low = truncate_h1(diag, 0.5, order="lowest")
        assert bars_of(top) == [(1, 0.0, 0.9, False)]
        assert bars_of(low) == [(1, 0.1, 0.2, False)]

    def test_rejects_bad_pct(self):
        with pytest.raises(ValueError):
            truncate_h1(Diagram.empty(), 0.0)
        with pytest.raises(ValueError):
            truncate_h1(Diagram.empty(), 1.5)


class TestSerialization:
    def test_roundtrip(self):
        rng = np.random.default_rng(4)
        img = rng.uniform(size=(12, 12))
        diag = compute_diagram(img)
        text = dump_diagram_tsv(diag)
        back = parse_diagram_tsv(text)
        assert bars_of(back) == bars_of(diag)
        # repr round-trips floats exactly
        assert np.array_equal(back.canonical().births, diag.canonical().births)

    def test_format(self):
        diag = Diagram.from_bars([(0.25, 1.0, 0, True)])
        assert dump_diagram_tsv(diag) == "0\t0.25\t1.0\t1\n"

    def test_invariant_rejects_backwards_bar(self):
        with pytest.raises(ValueError):
            Diagram.from_bars([(0.9, 0.1, 0)])
        with pytest.raises(ValueError):
            Diagram.from_bars([(0.5, 0.5, 1)])  # zero-lifetime finite
