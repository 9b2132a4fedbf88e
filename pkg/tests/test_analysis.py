import math

import numpy as np
import pytest

from nufsamp import (
    ObjectiveSpec,
    Signal,
    average_psd,
    back_projection,
    certify_spurious_minima,
    cost,
    cost_terms,
    deviation_constants,
    minimizer_count_scaling,
    pseudo_inverse,
    scan_landscape,
    tikhonov,
)
from nufsamp.analysis import grid_local_maxima_1d, grid_local_minima
from nufsamp.signals import gaussian_bump, high_freq_cosine, low_freq_sine

from helpers import random_signal

COSINE_CURVATURE = np.pi**2 * np.sqrt(2) / 8


def test_deviation_constants_table():
    assert deviation_constants(back_projection(), 0.5) == (0.0, 0.5)
    assert deviation_constants(pseudo_inverse(), 0.5) == (1.0, 1.0)
    a3, b3 = deviation_constants(tikhonov(0.3), 0.5)
    assert a3 == pytest.approx(1.0) and b3 == pytest.approx(8.0)
    with pytest.raises(ValueError):
        deviation_constants(back_projection(), 1.0)
    with pytest.raises(ValueError):
        deviation_constants(back_projection(), 0.0)


def test_deviation_constants_monotone_in_eps():
    eps = np.linspace(0.05, 0.95, 19)
    for rec in (back_projection(), pseudo_inverse(), tikhonov(1.0)):
        pairs = [deviation_constants(rec, e) for e in eps]
        a_vals = [p[0] for p in pairs]
        b_vals = [p[1] for p in pairs]
        assert all(x <= y for x, y in zip(a_vals, a_vals[1:]))
        assert all(x < y for x, y in zip(b_vals, b_vals[1:]))


def test_certificate_corollary_scale():
    n_len = 1024
    u = high_freq_cosine(n_len)
    z = np.arange(-n_len / 2, n_len / 2, 64.0)  # spacing 2p with p = 32
    cert = certify_spurious_minima(
        u, z, radius=0.25, curvature=COSINE_CURVATURE, m_samples=3,
        sigma=0.0, rec=back_projection(),
    )
    assert cert.holds, cert.reason
    assert cert.count_lower_bound == math.comb(16, 3) * 6
    assert cert.separation == 64.0


def test_certificate_fails_when_m_exceeds_candidates():
    n_len = 1024
    u = high_freq_cosine(n_len)
    z = np.arange(-n_len / 2, n_len / 2, 64.0)
    cert = certify_spurious_minima(
        u, z, 0.25, COSINE_CURVATURE, m_samples=len(z) + 1, sigma=0.0,
        rec=back_projection(),
    )
    assert not cert.holds and "candidates" in cert.reason


def test_certificate_fails_when_separation_too_small():
    u = high_freq_cosine(64)
    z = np.arange(-32.0, 32.0, 2.0)  # separation 2 <= 1 + 2r for r = 1
    cert = certify_spurious_minima(u, z, 1.0, COSINE_CURVATURE, 2, 0.0, back_projection())
    assert not cert.holds and "separation" in cert.reason


def test_certificate_noise_threshold_flip():
    # closed-form threshold from c r^2/2 = eps M (1 + sigma^2), energies all 1
    n_len = 1024
    u = high_freq_cosine(n_len)
    z = np.arange(-n_len / 2, n_len / 2, 64.0)
    r, m = 0.25, 3
    eps = 1.0 / (64.0 - 2 * r)
    sigma_th = math.sqrt(COSINE_CURVATURE * r**2 / (2 * eps * m) - 1.0)
    below = certify_spurious_minima(
        u, z, r, COSINE_CURVATURE, m, sigma_th * (1 - 1e-6), back_projection()
    )
    above = certify_spurious_minima(
        u, z, r, COSINE_CURVATURE, m, sigma_th * (1 + 1e-6), back_projection()
    )
    assert below.holds and not above.holds


def test_certificate_concavity_check_rejects_large_curvature():
    u = high_freq_cosine(64)
    z = np.arange(-32.0, 32.0, 16.0)
    cert = certify_spurious_minima(u, z, 0.25, 10.0, 2, 0.0, back_projection())
    assert not cert.holds and "concavity" in cert.reason


def test_count_scaling_values():
    s = minimizer_count_scaling(1024, 0.0, back_projection())
    assert s.eta == 0.109 and s.m_samples == 3 and s.k_candidates == 16
    assert s.exact_count == math.comb(16, 3) * 6
    s1 = minimizer_count_scaling(1024, 1.0, pseudo_inverse())
    assert s1.eta == 3e-3
    with pytest.raises(ValueError):
        minimizer_count_scaling(18, 0.0, back_projection())


def test_count_scaling_lower_bound_below_exact_combinatorics():
    for n_len in (1024, 4096, 16384):
        s = minimizer_count_scaling(n_len, 0.0, back_projection())
        assert s.m_samples >= 1
        assert s.lower_bound <= s.exact_count


def test_landscape_symmetry_and_cosine_minima():
    u = high_freq_cosine(16)
    grid = scan_landscape(u, "negF", 16, res=256)
    assert np.abs(grid.values - grid.values.T).max() < 1e-10
    coords = grid.minima_coords()
    assert len(coords) == 64  # 8 x 8 even-integer pairs
    offsets = coords - 2 * np.round(coords / 2)
    assert np.abs(offsets).max() <= 16 / 256  # within one grid cell


def test_landscape_validation():
    u = high_freq_cosine(16)
    with pytest.raises(ValueError):
        scan_landscape(u, "J3", 16)  # missing lam
    with pytest.raises(ValueError):
        scan_landscape(u, "negG", 16)
    with pytest.raises(ValueError):
        scan_landscape(u, "J1", 16, res=4)


def test_landscape_matches_pointwise_cost():
    rng = np.random.default_rng(0)
    u = random_signal(rng, 16)
    res = 32
    sigma, lam = 0.2, 0.3
    grids = {
        term: scan_landscape(u, term, 16, res=res, sigma=sigma, lam=lam)
        for term in ("J1", "J2", "J3", "G1", "G2", "negF")
    }
    recs = {"J1": back_projection(), "J2": pseudo_inverse(), "J3": tikhonov(lam)}
    for _ in range(40):
        i, j = rng.integers(0, res, 2)
        f = np.array([grids["J1"].axis[i], grids["J1"].axis[j]])
        for term in ("J1", "J2", "J3"):
            spec = ObjectiveSpec.single(u, recs[term], sigma)
            assert grids[term].values[i, j] == pytest.approx(
                cost(spec, f).value, abs=1e-10
            )
        f_term, g1 = cost_terms(ObjectiveSpec.single(u, back_projection()), f)
        _, g2 = cost_terms(ObjectiveSpec.single(u, pseudo_inverse()), f)
        assert grids["negF"].values[i, j] == pytest.approx(-f_term, abs=1e-12)
        assert grids["G1"].values[i, j] == pytest.approx(g1, abs=1e-12)
        assert grids["G2"].values[i, j] == pytest.approx(g2, abs=1e-10)


def test_minima_detection_matches_brute_force():
    rng = np.random.default_rng(1)
    u = random_signal(rng, 16)
    grid = scan_landscape(u, "J1", 16, res=128)
    vals = grid.values
    res = 128
    brute = []
    for i in range(res):
        for j in range(res):
            v = vals[i, j]
            neigh = [
                vals[(i + di) % res, (j + dj) % res]
                for di in (-1, 0, 1)
                for dj in (-1, 0, 1)
                if (di, dj) != (0, 0)
            ]
            if all(v <= w for w in neigh) and any(v < w for w in neigh):
                brute.append((i, j))
    # generic smooth landscape: no plateaus, so the rules coincide
    assert brute == grid.minima


def test_plateau_collapse():
    vals = np.full((6, 6), 3.0)
    vals[2, 2] = vals[2, 3] = 1.0  # two-node plateau
    vals[4, 5] = 0.5
    assert grid_local_minima(vals) == [(2, 2), (4, 5)]
    flat = np.zeros((4, 4))
    assert grid_local_minima(flat) == []  # constant grid has no strict side


def test_psd_flat_for_unit_impulse():
    values = np.zeros(16)
    values[8] = 4.0  # impulse at n = 0: transform modulus exactly constant
    profile = average_psd(Signal(values))
    np.testing.assert_array_equal(profile.rho, 1.0)
    assert profile.maxima == []
    off_center = np.zeros(16)
    off_center[3] = 4.0  # flat up to rounding of |exp(i theta)|
    np.testing.assert_allclose(average_psd(Signal(off_center)).rho, 1.0, atol=1e-12)


def test_psd_cosine_maxima_on_even_integers():
    profile = average_psd(high_freq_cosine(16))
    np.testing.assert_allclose(
        profile.rho, np.cos(np.pi * profile.grid / 2) ** 2, atol=1e-12
    )
    coords = profile.maxima_coords()
    assert len(coords) == 8
    np.testing.assert_array_equal(np.sort(coords), np.arange(-8.0, 8.0, 2.0))
    assert np.all(profile.max_curvatures() > 0)


def test_psd_parseval_normalization():
    rng = np.random.default_rng(2)
    sigs = [random_signal(rng, 32, unit=False) for _ in range(5)]
    profile = average_psd(sigs)
    mean_norm = np.mean([s.norm_sq() for s in sigs])
    assert abs(profile.rho.mean() - mean_norm / 32) < 1e-6


def test_psd_1d_maxima_rule():
    vals = np.array([0.0, 1.0, 1.0, 0.0, 2.0, 0.5])
    assert grid_local_maxima_1d(vals) == [1, 4]
