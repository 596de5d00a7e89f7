"""Stability and correctness check battery on seeded random instances.

Every check returns a CheckResult with the worst observed ratio of
empirical quantity to its theoretical bound (or tolerance), so a passing
run reports how much slack each bound has. The brute-force Betti oracle
here is deliberately independent of the persistence implementation:
components are counted by flood fill and loops via the Euler formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import check_image
from .metrics import bottleneck, wasserstein1
from .persistence import betti_curve, compute_diagram
from .synthetic import smooth_noise_image
from .vectorize import gate, stacked_subband_maps
from .wavelet import FAMILIES, VALID_DEPTHS, dwt2, idwt2, tau

__all__ = [
    "CheckResult",
    "betti_numbers_bruteforce",
    "check_gate_partials",
    "check_gate_lipschitz",
    "check_subband_bounds",
    "check_diagram_stability",
    "check_betti_curves",
    "check_wavelet_invariants",
    "check_near_diagonal",
    "run_all",
]

LIPSCHITZ = {1: 1.0, 2: np.sqrt(2.0), "inf": 2.0}
GROUNDS = (1, 2, "inf")


@dataclass(frozen=True)
class CheckResult:
    name: str
    trials: int
    worst_ratio: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.note}" if self.note else ""
        return f"[{status}] {self.name}: worst_ratio={self.worst_ratio:.6g} trials={self.trials}{extra}"


def _random_diagram(rng: np.random.Generator, max_points: int = 12) -> np.ndarray:
    n = int(rng.integers(0, max_points + 1))
    b = rng.uniform(0.0, 1.0, size=n)
    d = b + rng.uniform(0.0, 1.0, size=n) * (1.0 - b)
    keep = d > b
    return np.column_stack([b[keep], d[keep]])


def check_gate_partials(n_samples: int, epsilon: float = 1e-6, seed: int = 0, step: float = 1e-6) -> CheckResult:
    """Central finite differences of the gate in b and d stay within 1."""
    rng = np.random.default_rng(seed)
    lo = rng.uniform(0.0, 1.0, size=n_samples)
    hi = rng.uniform(0.0, 1.0, size=n_samples)
    b = np.minimum(lo, hi)
    d = np.maximum(lo, hi)
    psi = b + rng.uniform(0.0, 1.0, size=n_samples) * (d - b)

    def w(psi_v, b_v, d_v):
        inside = (psi_v >= b_v) & (psi_v < d_v)
        return np.where(inside, (psi_v - b_v) * (d_v - psi_v) / ((d_v - b_v) + epsilon), 0.0)

    fd_b = np.abs(w(psi, b + step, d) - w(psi, b - step, d)) / (2 * step)
    fd_d = np.abs(w(psi, b, d + step) - w(psi, b, d - step)) / (2 * step)
    worst = float(max(fd_b.max(), fd_d.max()))
    return CheckResult("gate-partial-derivative-bound", n_samples, worst, worst <= 1.0 + 1e-4)


def check_gate_lipschitz(n_samples: int, epsilon: float = 1e-6, seed: int = 1) -> CheckResult:
    """|w(psi;b,d) - w(psi;b',d')| against the per-norm Lipschitz constants."""
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0.0, 1.0, size=n_samples)
    pts = rng.uniform(0.0, 1.0, size=(n_samples, 4))  # (b, d, b', d') unconstrained in the square

    def w(b, d):
        inside = (psi >= b) & (psi < d)
        den = (d - b) + epsilon
        safe = np.where(den > 0, den, 1.0)
        return np.where(inside & (den > 0), (psi - b) * (d - psi) / safe, 0.0)

    dw = np.abs(w(pts[:, 0], pts[:, 1]) - w(pts[:, 2], pts[:, 3]))
    db = np.abs(pts[:, 0] - pts[:, 2])
    dd = np.abs(pts[:, 1] - pts[:, 3])
    worst = 0.0
    for p, norm in ((1, db + dd), (2, np.hypot(db, dd)), ("inf", np.maximum(db, dd))):
        bound = LIPSCHITZ[p] * norm
        nz = bound > 0
        if np.any(dw[~nz] > 0):
            worst = np.inf
        if np.any(nz):
            worst = max(worst, float((dw[nz] / bound[nz]).max()))
    return CheckResult("gate-lipschitz-constants", n_samples, worst, worst <= 1.0 + 1e-9)


def check_subband_bounds(n_pairs: int, epsilon: float = 1e-6, seed: int = 2, side: int = 64) -> tuple[CheckResult, CheckResult]:
    """Frobenius bound per subband and Euclidean bound for the stacked maps.

    Exercises every wavelet family and depth in rotation; the Wasserstein
    side is the exact solver, so observed ratios above 1 are violations.
    """
    rng = np.random.default_rng(seed)
    families = sorted(FAMILIES)
    worst_single = 0.0
    worst_stack = 0.0
    for t in range(n_pairs):
        family = families[t % len(families)]
        depth = VALID_DEPTHS[t % len(VALID_DEPTHS)]
        img = smooth_noise_image(rng, side, side, smooth=1.5)
        bands = [tau(band) for band in dwt2(img, family, depth).level(depth)]
        omega = bands[0].size

        d_a = _random_diagram(rng)
        d_b = _random_diagram(rng)
        maps_a = stacked_subband_maps(bands, d_a, epsilon)
        maps_b = stacked_subband_maps(bands, d_b, epsilon)
        diff_per_band = [np.linalg.norm(a - b) for a, b in zip(maps_a, maps_b)]
        diff_stack = float(np.sqrt(sum(d**2 for d in diff_per_band)))

        for p in GROUNDS:
            w1 = wasserstein1(d_a, d_b, ground_p=np.inf if p == "inf" else p).cost
            if w1 == 0.0:
                if max(diff_per_band) > 0:
                    worst_single = np.inf
                continue
            bound = LIPSCHITZ[p] * np.sqrt(omega) * w1
            worst_single = max(worst_single, max(diff_per_band) / bound)
            stack_bound = LIPSCHITZ[p] * np.sqrt(3 * omega) * w1
            worst_stack = max(worst_stack, diff_stack / stack_bound)
    single = CheckResult(
        "subband-map-frobenius-bound", n_pairs, float(worst_single), worst_single <= 1.0 + 1e-9
    )
    stack = CheckResult(
        "stacked-map-euclidean-bound", n_pairs, float(worst_stack), worst_stack <= 1.0 + 1e-9
    )
    return single, stack


def check_diagram_stability(
    n_images: int, eps_levels=(0.01, 0.05), seed: int = 3, side: int = 48
) -> CheckResult:
    """d_B between base and l-inf-perturbed image diagrams, per dimension."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = 0
    for _ in range(n_images):
        base = smooth_noise_image(rng, side, side, smooth=2.0)
        diag = compute_diagram(base)
        for eps in eps_levels:
            noisy = np.clip(base + rng.uniform(-eps, eps, size=base.shape), 0.0, 1.0)
            diag_n = compute_diagram(noisy)
            for dim in (0, 1):
                d_b = bottleneck(diag.pairs(dim), diag_n.pairs(dim))
                worst = max(worst, d_b / eps)
                if d_b > eps + 1e-9:
                    violations += 1
    return CheckResult(
        "diagram-bottleneck-stability",
        n_images * len(eps_levels) * 2,
        float(worst),
        violations == 0,
    )


def _flood_fill_components(mask: np.ndarray) -> int:
    """4-connected component count by explicit flood fill (oracle path)."""
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    count = 0
    for sr in range(h):
        for sc in range(w):
            if not mask[sr, sc] or seen[sr, sc]:
                continue
            count += 1
            stack = [(sr, sc)]
            seen[sr, sc] = True
            while stack:
                r, c = stack.pop()
                for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                    if 0 <= nr < h and 0 <= nc < w and mask[nr, nc] and not seen[nr, nc]:
                        seen[nr, nc] = True
                        stack.append((nr, nc))
    return count


def betti_numbers_bruteforce(img, delta: float) -> tuple[int, int]:
    """(beta0, beta1) of the sublevel complex at delta.

    beta0 by flood fill on the vertex graph; beta1 = beta0 - chi with
    chi = V - E + F counted directly on the sublevel cells (beta2 = 0 on
    a planar grid).
    """
    arr = check_image(img, min_side=2)
    mask = arr <= delta
    b0 = _flood_fill_components(mask)
    v = int(mask.sum())
    e = int((mask[:, :-1] & mask[:, 1:]).sum() + (mask[:-1, :] & mask[1:, :]).sum())
    f = int((mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, :-1] & mask[1:, 1:]).sum())
    return b0, b0 - (v - e + f)


def check_betti_curves(n_images: int, seed: int = 4, max_side: int = 16) -> CheckResult:
    """Diagram-derived Betti curves match the brute-force oracle exactly."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for t in range(n_images):
        h = int(rng.integers(2, max_side + 1))
        w = int(rng.integers(2, max_side + 1))
        img = rng.uniform(0.0, 1.0, size=(h, w))
        if t % 2:
            img = np.round(img * 8) / 8.0  # quantize to force ties
        diag = compute_diagram(img)
        thresholds = np.unique(img)
        curve0 = betti_curve(diag, 0, thresholds)
        curve1 = betti_curve(diag, 1, thresholds)
        for i, delta in enumerate(thresholds):
            b0, b1 = betti_numbers_bruteforce(img, float(delta))
            if b0 != curve0[i] or b1 != curve1[i]:
                mismatches += 1
    return CheckResult(
        "betti-curve-oracle",
        n_images,
        float(mismatches),
        mismatches == 0,
        note="ratio counts threshold mismatches",
    )


def check_wavelet_invariants(n_images: int, seed: int = 5, side: int = 256) -> tuple[CheckResult, CheckResult]:
    """Parseval (1e-9 relative) and round-trip reconstruction (1e-10 max)."""
    rng = np.random.default_rng(seed)
    worst_energy = 0.0
    worst_recon = 0.0
    trials = 0
    for _ in range(n_images):
        img = rng.uniform(0.0, 1.0, size=(side, side))
        energy_in = float(np.sum(img**2))
        for family in sorted(FAMILIES):
            for depth in VALID_DEPTHS:
                pyr = dwt2(img, family, depth)
                worst_energy = max(worst_energy, abs(pyr.energy() - energy_in) / energy_in)
                worst_recon = max(worst_recon, float(np.abs(idwt2(pyr) - img).max()))
                trials += 1
    parseval = CheckResult("wavelet-parseval", trials, worst_energy / 1e-9, worst_energy <= 1e-9)
    recon = CheckResult("wavelet-reconstruction", trials, worst_recon / 1e-10, worst_recon <= 1e-10)
    return parseval, recon


def check_near_diagonal(epsilon: float = 1e-6, gap: float = 1e-9, seed: int = 6, n_bars: int = 1000) -> CheckResult:
    """Bars with lifetime ~gap stay finite and below the (d-b)^2/(4 eps) peak."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_bars):
        b = rng.uniform(0.0, 1.0 - gap)
        d = b + gap
        psi = np.linspace(b, d, 101)
        vals = gate(psi, b, d, epsilon)
        if not np.all(np.isfinite(vals)):
            return CheckResult("gate-near-diagonal", n_bars, np.inf, False, note="non-finite gate value")
        worst = max(worst, float(vals.max()) / (gap**2 / (4 * epsilon)))
    return CheckResult("gate-near-diagonal", n_bars, worst, worst <= 1.0 + 1e-9)


def run_all(trials: int = 100, epsilon: float = 1e-6, seed: int = 0) -> list[CheckResult]:
    """The cmd_verify battery; trial counts scale with the trials knob."""
    results = [
        check_gate_partials(max(1000, trials * 1000), epsilon=epsilon, seed=seed),
        check_gate_lipschitz(max(10000, trials * 10000), epsilon=epsilon, seed=seed + 1),
    ]
    results.extend(check_subband_bounds(max(10, trials), epsilon=epsilon, seed=seed + 2))
    results.append(check_diagram_stability(max(4, trials // 4), seed=seed + 3))
    results.append(check_betti_curves(max(10, trials), seed=seed + 4))
    results.extend(check_wavelet_invariants(max(2, trials // 20), seed=seed + 5))
    results.append(check_near_diagonal(epsilon=epsilon, seed=seed + 6))
    return results
