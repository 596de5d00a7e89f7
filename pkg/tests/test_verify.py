import numpy as np

from wph.verify import (
    CheckResult,
    betti_numbers_bruteforce,
    check_gate_partials,
    check_near_diagonal,
    run_all,
)


class TestGateChecks:
    def test_larger_epsilon_loosens_partials(self):
        # With eps = 0.1 the true derivative magnitudes shrink by
        # ((d-b)/(d-b+eps))^2, so the observed ratio sits strictly below 1.
        tight = check_gate_partials(20000, epsilon=1e-6, seed=0)
        loose = check_gate_partials(20000, epsilon=0.1, seed=0)
        assert loose.passed and tight.passed
        assert loose.worst_ratio < 0.99
        assert loose.worst_ratio < tight.worst_ratio

    def test_near_diagonal_no_overflow(self):
        result = check_near_diagonal(epsilon=1e-6, gap=1e-9)
        assert result.passed
        assert np.isfinite(result.worst_ratio)


class TestBruteforceOracle:
    def test_known_shapes(self):
        ring = np.array(
            [
                [0.1, 0.1, 0.1],
                [0.1, 0.9, 0.1],
                [0.1, 0.1, 0.1],
            ]
        )
        assert betti_numbers_bruteforce(ring, 0.05) == (0, 0)
        assert betti_numbers_bruteforce(ring, 0.1) == (1, 1)  # the dark loop
        assert betti_numbers_bruteforce(ring, 0.9) == (1, 0)  # filled in

    def test_two_components(self):
        img = np.array(
            [
                [0.0, 0.9, 0.2],
                [0.0, 0.9, 0.2],
            ]
        )
        assert betti_numbers_bruteforce(img, 0.2) == (2, 0)
        assert betti_numbers_bruteforce(img, 0.9) == (1, 0)


class TestBattery:
    def test_small_run_all_passes(self):
        results = run_all(trials=10, epsilon=1e-6, seed=0)
        assert all(isinstance(r, CheckResult) for r in results)
        assert all(r.passed for r in results), [r.line() for r in results if not r.passed]
        names = [r.name for r in results]
        for expected in (
            "gate-partial-derivative-bound",
            "gate-lipschitz-constants",
            "subband-map-frobenius-bound",
            "stacked-map-euclidean-bound",
            "diagram-bottleneck-stability",
            "betti-curve-oracle",
            "wavelet-parseval",
            "wavelet-reconstruction",
            "gate-near-diagonal",
        ):
            assert expected in names

    def test_line_format(self):
        line = CheckResult("demo", 5, 0.5, True, note="hi").line()
        assert line.startswith("[PASS] demo:") and "hi" in line
        assert CheckResult("demo", 5, 2.0, False).line().startswith("[FAIL]")
