import numpy as np
import pytest

from nufsamp import (
    ObjectiveSpec,
    Signal,
    back_projection,
    cost,
    cost_gradient,
    cost_gradient_fd,
    cost_terms,
    gram_closed_form,
    gradient_decay_bound,
    min_distance,
    nuft_adjoint,
    pseudo_inverse,
    residual,
    tikhonov,
)
from nufsamp.analysis import deviation_constants, scan_landscape
from nufsamp.fourier import gram_kernel_deriv, _adjoint_deriv_values
from nufsamp.objective import BackProjectionPool
from nufsamp.reconstruct import q_factor, rr_factor
from nufsamp.signals import gaussian_bump, high_freq_cosine

from helpers import random_signal, random_subgrid, separated_scheme

ALL_KINDS = [back_projection(), pseudo_inverse(), tikhonov(0.5)]


def tilde_cost(u, freqs, sigma):
    uh = nuft_adjoint(u, freqs)
    return 0.5 * u.norm_sq() - 0.5 * float(np.vdot(uh, uh).real) + sigma**2 * len(freqs) / 2


def test_subgrid_identity_all_kinds():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n_len = int(rng.choice([16, 64]))
        m = int(rng.integers(2, n_len))
        f = random_subgrid(rng, n_len, m)
        u = random_signal(rng, n_len, unit=False)
        sigma = float(rng.choice([0.0, 0.3]))
        for rec in ALL_KINDS:
            spec = ObjectiveSpec.single(u, rec, sigma)
            assert abs(cost(spec, f).value - tilde_cost(u, f, sigma)) < 1e-12


def test_full_subgrid_pinv_zero_cost():
    rng = np.random.default_rng(1)
    u = random_signal(rng, 16)
    f = np.arange(-8, 8, 1.0)
    spec = ObjectiveSpec.single(u, pseudo_inverse(), 0.0)
    assert abs(cost(spec, f).value) < 1e-12


def test_cost_matches_monte_carlo():
    rng = np.random.default_rng(2)
    n_len, m, sigma, draws = 16, 4, 0.1, 100_000
    u = random_signal(rng, n_len)
    f = rng.uniform(-8, 8, m)
    from nufsamp.fourier import nuft_matrix

    a_mat = nuft_matrix(f, n_len)
    uh = nuft_adjoint(u, f)
    for rec in ALL_KINDS:
        exact = cost(ObjectiveSpec.single(u, rec, sigma), f).value
        q = q_factor(rec, gram_closed_form(f, n_len))
        w = (sigma / np.sqrt(2)) * (
            rng.standard_normal((m, draws)) + 1j * rng.standard_normal((m, draws))
        )
        recon = a_mat @ (q @ (uh[:, None] + w))
        errs = 0.5 * np.sum(np.abs(recon - u.values[:, None]) ** 2, axis=0)
        mc = errs.mean()
        se = errs.std(ddof=1) / np.sqrt(draws)
        assert abs(exact - mc) < 3 * se, (rec.kind, exact, mc, se)


def test_terms_subgrid_and_zero_signal():
    rng = np.random.default_rng(3)
    f = random_subgrid(rng, 16, 5)
    u = random_signal(rng, 16)
    for rec in (back_projection(), pseudo_inverse()):
        _, g = cost_terms(ObjectiveSpec.single(u, rec), f)
        assert abs(g) < 1e-14
    zero = Signal(np.zeros(16))
    f_term, g_term = cost_terms(ObjectiveSpec.single(zero, back_projection()), f)
    assert f_term == 0 and g_term == 0


def test_terms_recombine_to_cost():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n_len = 32
        u = random_signal(rng, n_len)
        f = rng.uniform(-16, 16, 6)
        sigma = float(rng.choice([0.0, 0.2]))
        for rec in (back_projection(), pseudo_inverse()):
            spec = ObjectiveSpec.single(u, rec, sigma)
            ev = cost(spec, f, with_terms=True)
            recombined = 0.5 * u.norm_sq() - ev.energy_term + ev.interference_term + ev.noise_term
            assert abs(ev.value - recombined) < 1e-12


def test_terms_multi_signal_recombine():
    rng = np.random.default_rng(40)
    sigs = [random_signal(rng, 32) for _ in range(3)]
    f = rng.uniform(-16, 16, 5)
    for rec in (back_projection(), pseudo_inverse()):
        spec = ObjectiveSpec(rec, sigs, 0.1)
        ev = cost(spec, f, with_terms=True)
        mean_norm = np.mean([s.norm_sq() for s in sigs])
        recombined = 0.5 * mean_norm - ev.energy_term + ev.interference_term + ev.noise_term
        assert abs(ev.value - recombined) < 1e-12


def test_terms_rejected_for_tikhonov():
    rng = np.random.default_rng(5)
    u = random_signal(rng, 16)
    with pytest.raises(ValueError):
        cost_terms(ObjectiveSpec.single(u, tikhonov(0.5)), np.array([0.0, 1.5]))


def test_residual_full_subgrid_vanishes():
    rng = np.random.default_rng(6)
    u = random_signal(rng, 16)
    res = residual(u, np.arange(-8, 8, 1.0))
    assert np.abs(res.r.values).max() < 1e-12
    assert np.abs(res.r_hat).max() < 1e-12


def test_residual_transform_bound_and_two_paths():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n_len = int(rng.choice([16, 64]))
        m = int(rng.integers(2, 9))
        f = separated_scheme(rng, n_len, m)
        u = random_signal(rng, n_len)
        res = residual(u, f)
        uh = nuft_adjoint(u, f)
        md = min_distance(f, n_len)
        assert np.abs(res.r_hat).max() <= np.linalg.norm(uh) / md + 1e-12
        # independent path: transform of the residual signal
        np.testing.assert_allclose(res.r_hat, nuft_adjoint(res.r, f), atol=1e-12)


def test_residual_prime_is_pointwise_derivative():
    # kernel-matrix route (with i pi/N diagonal, minus the direct-term
    # derivative) agrees with the differentiated transform of r
    rng = np.random.default_rng(8)
    n_len = 32
    u = random_signal(rng, n_len)
    f = rng.uniform(-16, 16, 5)
    res = residual(u, f)
    kp = gram_kernel_deriv(f[:, None] - f[None, :], n_len)
    uh = nuft_adjoint(u, f)
    uhp = _adjoint_deriv_values(u.values, f)
    np.testing.assert_allclose(res.r_hat_prime, kp @ uh - uhp, atol=1e-12)


def test_gradient_vs_finite_differences():
    rng = np.random.default_rng(9)
    for _ in range(25):
        n_len = int(rng.choice([16, 32, 64]))
        m = int(rng.integers(1, 17))
        sigma = float(rng.choice([0.0, 0.1]))
        u = random_signal(rng, n_len)
        f = rng.uniform(-n_len / 2, n_len / 2, m)
        spec = ObjectiveSpec.single(u, back_projection(), sigma)
        g = cost_gradient(spec, f)
        g_fd = cost_gradient_fd(spec, f)
        assert np.max(np.abs(g - g_fd) / (1 + np.abs(g_fd))) < 1e-5


def test_gradient_zero_signal():
    spec = ObjectiveSpec.single(Signal(np.zeros(16)), back_projection())
    np.testing.assert_array_equal(cost_gradient(spec, np.array([0.5, 3.3])), 0)


def test_gradient_vanishes_on_even_subgrid_of_cosine():
    u = high_freq_cosine(16)
    spec = ObjectiveSpec.single(u, back_projection())
    f = np.arange(-8, 8, 2.0)
    assert np.abs(cost_gradient(spec, f)).max() < 1e-10


def test_noise_term_is_gradient_free_for_back_projection():
    # trace of the Gram matrix is exactly M whatever the scheme
    rng = np.random.default_rng(10)
    f = rng.uniform(-16, 16, 7)
    assert np.trace(gram_closed_form(f, 32)) == 7.0
    u = random_signal(rng, 32)
    g0 = cost_gradient(ObjectiveSpec.single(u, back_projection(), 0.0), f)
    g1 = cost_gradient(ObjectiveSpec.single(u, back_projection(), 0.7), f)
    np.testing.assert_array_equal(g0, g1)


def test_fd_gradient_rejects_bad_step_and_periodic_direction():
    rng = np.random.default_rng(11)
    u = random_signal(rng, 16)
    spec = ObjectiveSpec.single(u, back_projection())
    with pytest.raises(ValueError):
        cost_gradient_fd(spec, np.array([0.5]), h=0.0)
    f = rng.integers(-64, 64, 4) / 8.0  # dyadic: exact periodic shifts
    for m in range(4):
        e = np.zeros(4)
        e[m] = 16.0
        assert cost(spec, f + e).value - cost(spec, f - e).value == 0.0


def test_fd_gradient_vanishes_at_refined_landscape_minima():
    u = high_freq_cosine(16)
    spec = ObjectiveSpec.single(u, back_projection())
    grid = scan_landscape(u, "J1", 16, res=256)
    coords = grid.minima_coords()
    rng = np.random.default_rng(12)
    picks = coords[rng.choice(len(coords), size=5, replace=False)]
    cell = 16.0 / 256
    for x in picks:
        x = x.copy()
        # iterated coordinate bisection around the detected node
        h = cell
        for _ in range(40):
            for m in range(2):
                trials = [x.copy() for _ in range(3)]
                trials[1][m] += h / 2
                trials[2][m] -= h / 2
                vals = [cost(spec, t).value for t in trials]
                x = trials[int(np.argmin(vals))]
            h /= 2
        assert np.abs(cost_gradient_fd(spec, x, h=1e-6)).max() < 1e-6


def test_gradient_decay_bound_holds():
    rng = np.random.default_rng(13)
    for _ in range(300):
        n_len = int(rng.choice([16, 32, 64]))
        m = int(rng.integers(2, 9))
        f = separated_scheme(rng, n_len, m)
        u = random_signal(rng, n_len)
        b = gradient_decay_bound(u, f, int(rng.integers(m)))
        assert b.lhs <= b.rhs


def test_gradient_decay_bound_zero_signal():
    b = gradient_decay_bound(Signal(np.zeros(16)), np.array([0.0, 5.0]), 1)
    assert b.lhs == 0 and b.rhs == 0


def test_gradient_decay_sweep_monotone():
    # even-offset sweep: odd and even integer offsets carry opposite coupling
    # signs, so the decay is monotone along each parity class
    n_len = 64
    u = gaussian_bump(n_len, width=2.0)
    spec = ObjectiveSpec.single(u, back_projection())
    vals = [
        abs(cost_gradient(spec, np.array([0.0, float(xi)]))[1])
        for xi in range(2, n_len // 2 + 1, 2)
    ]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_cost_periodicity_exact():
    rng = np.random.default_rng(14)
    u = random_signal(rng, 16)
    f = rng.integers(-64, 64, 5) / 8.0
    for rec in ALL_KINDS:
        spec = ObjectiveSpec.single(u, rec, 0.1)
        base = cost(spec, f).value
        for m in range(5):
            shift = np.zeros(5)
            shift[m] = 32.0
            assert cost(spec, f + shift).value == base


def test_cost_permutation_invariance():
    rng = np.random.default_rng(15)
    u = random_signal(rng, 32)
    f = rng.uniform(-16, 16, 8)
    perm = rng.permutation(8)
    for rec in ALL_KINDS:
        spec = ObjectiveSpec.single(u, rec, 0.1)
        a, b = cost(spec, f).value, cost(spec, f[perm]).value
        assert abs(a - b) <= 1e-12 * (1 + abs(a))


def test_cost_deviation_from_orthogonal_case():
    # |J - Jtilde| <= (a + b/2) ||uhat||^2 + (b/2) sigma^2 M on separated schemes
    rng = np.random.default_rng(16)
    for _ in range(100):
        n_len = int(rng.choice([32, 128]))
        m = int(rng.integers(2, 10))
        f = separated_scheme(rng, n_len, m)
        u = random_signal(rng, n_len)
        sigma = float(rng.choice([0.0, 0.5]))
        eps = 1 / min_distance(f, n_len)
        uh_sq = float(np.sum(np.abs(nuft_adjoint(u, f)) ** 2))
        for rec in ALL_KINDS:
            a, b = deviation_constants(rec, eps)
            gap = abs(cost(ObjectiveSpec.single(u, rec, sigma), f).value - tilde_cost(u, f, sigma))
            assert gap <= (a + b / 2) * uh_sq + (b / 2) * sigma**2 * m + 1e-12


def test_multi_signal_averaging_and_pool():
    rng = np.random.default_rng(17)
    sigs = [random_signal(rng, 32) for _ in range(12)]
    f = rng.uniform(-16, 16, 6)
    spec = ObjectiveSpec(back_projection(), sigs, 0.1)
    per_signal = np.mean(
        [cost(ObjectiveSpec.single(s, back_projection(), 0.1), f).value for s in sigs]
    )
    assert abs(cost(spec, f).value - per_signal) < 1e-12
    pool = BackProjectionPool(sigs, 0.1)
    v, g = pool.value_and_grad(f)
    assert abs(v - cost(spec, f).value) < 1e-12
    np.testing.assert_allclose(g, cost_gradient(spec, f), atol=1e-13)
    # multi-signal gradient is the average of single-signal gradients
    avg = np.mean(
        [cost_gradient(ObjectiveSpec.single(s, back_projection(), 0.1), f) for s in sigs],
        axis=0,
    )
    np.testing.assert_allclose(g, avg, atol=1e-13)


def test_spec_validation():
    rng = np.random.default_rng(18)
    with pytest.raises(ValueError):
        ObjectiveSpec(back_projection(), ())
    with pytest.raises(ValueError):
        ObjectiveSpec(back_projection(), (random_signal(rng, 16),), sigma=-0.1)
    with pytest.raises(ValueError):
        ObjectiveSpec(back_projection(), (random_signal(rng, 16), random_signal(rng, 32)))
    with pytest.raises(ValueError):
        cost_gradient(ObjectiveSpec.single(random_signal(rng, 16), tikhonov(1.0)), np.array([0.5]))
