import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddkl import gff, schedules
from ddkl.covariance import DenseCovariance


def test_linear_beta_examples():
    s = schedules.make_linear_beta(1, 0.1, 0.1)
    assert s.betas.tolist() == [0.1]
    assert s.alpha_bar(1) == pytest.approx(0.9, abs=1e-15)
    s = schedules.make_linear_beta(2, 0.1, 0.2)
    assert s.alpha_bars == pytest.approx([0.9, 0.72], abs=1e-15)
    assert s.alpha_bar(0) == 1.0


@pytest.mark.parametrize("args", [(0, 0.1, 0.2), (10, 0.2, 0.1), (10, 0.0, 0.1), (10, 0.1, 1.0), (1, 0.1, 0.2)])
def test_linear_beta_rejects(args):
    with pytest.raises(ValueError):
        schedules.make_linear_beta(*args)


def test_schedule_arrays_are_frozen():
    s = schedules.make_linear_beta(10, 1e-4, 0.02)
    with pytest.raises(ValueError):
        s.betas[0] = 0.5
    with pytest.raises(ValueError):
        s.alpha_bars[0] = 0.5


def test_index_bounds():
    s = schedules.make_linear_beta(10, 1e-4, 0.02)
    with pytest.raises(IndexError):
        s.alpha_bar(11)
    with pytest.raises(IndexError):
        s.beta(0)


@given(st.integers(2, 2000), st.floats(1e-5, 0.01), st.floats(0.011, 0.5))
@settings(max_examples=50, deadline=None)
def test_alpha_bar_is_decreasing_product(L, b1, bL):
    s = schedules.make_linear_beta(L, b1, bL)
    ab = np.array([s.alpha_bar(t) for t in range(L + 1)])
    assert np.all(np.diff(ab) < 0)
    assert np.all((ab > 0) & (ab <= 1))
    assert s.alpha_bar(L) == pytest.approx(np.prod(1 - s.betas), rel=1e-12)


def test_beta_tilde_bounds_and_first_step():
    s = schedules.make_linear_beta(1000, 1e-4, 0.02)
    assert s.beta_tilde(1) == 0.0
    for t in range(2, 1001, 37):
        assert 0 < s.beta_tilde(t) <= s.beta(t)


def test_subsequence_closes_with_one():
    s = schedules.make_linear_beta(1000, 1e-4, 0.02)
    seq = s.subsequence(100)
    assert seq[0] == 1000 and seq[-1] == 1 and seq[-2] == 10
    assert len(seq) == 101
    assert np.all(np.diff(seq) < 0)
    assert schedules.even_subsequence(10, 10).tolist() == list(range(10, 0, -1))
    with pytest.raises(ValueError):
        schedules.even_subsequence(10, 11)


def test_beta_integral_examples():
    s = schedules.ContinuousVPSchedule(0.1, 20.0)
    assert schedules.beta_integral(s, 0.0) == 0.0
    assert schedules.beta_integral(s, 1.0) == pytest.approx(10.05, abs=1e-12)
    assert schedules.beta_integral(s, 0.5) == pytest.approx(2.5375, abs=1e-12)
    with pytest.raises(ValueError):
        schedules.beta_integral(s, 1.5)


@given(st.floats(0.0, 1.0))
def test_beta_integral_matches_quadrature(t):
    s = schedules.ContinuousVPSchedule(0.1, 20.0)
    u = np.linspace(0, t, 2001)
    assert schedules.beta_integral(s, t) == pytest.approx(np.trapezoid(s.beta(u), u), abs=1e-9)


def test_geometric_sigma_examples():
    assert schedules.make_geometric_sigma(0.01, 20, 207).gamma == pytest.approx(1.0376, abs=1e-4)
    assert schedules.make_geometric_sigma(0.01, 50, 232).gamma == pytest.approx(1.0376, abs=1e-4)
    s = schedules.make_geometric_sigma(1.0, 3.0, 2)
    assert s.sigmas.tolist() == [1.0, 3.0] and s.gamma == pytest.approx(3.0)
    with pytest.raises(ValueError):
        schedules.make_geometric_sigma(2.0, 1.0, 10)
    with pytest.raises(ValueError):
        schedules.make_geometric_sigma(1.0, 1.0, 10)


@given(st.floats(1e-3, 1.0), st.floats(1.5, 100.0), st.integers(2, 500))
@settings(max_examples=50)
def test_geometric_ratio_constant(lo, hi_factor, L):
    s = schedules.make_geometric_sigma(lo, lo * hi_factor, L)
    r = s.sigmas[1:] / s.sigmas[:-1]
    assert np.allclose(r, s.gamma, rtol=1e-9)
    assert s.sigma_min == lo and s.sigma_max == pytest.approx(lo * hi_factor)


def test_tune_sigma1_examples():
    assert schedules.tune_sigma1(np.zeros((5, 3))) == 0.0
    assert schedules.tune_sigma1(np.array([[0.0, 0.0], [3.0, 4.0]])) == pytest.approx(5.0)
    # whitening by Σ inflates distances along low-variance directions
    cov = DenseCovariance(np.diag([4.0, 0.25]))
    assert schedules.tune_sigma1(np.array([[0.0, 0.0], [2.0, 0.0]]), cov) == pytest.approx(1.0)
    assert schedules.tune_sigma1(np.array([[0.0, 0.0], [0.0, 2.0]]), cov) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        schedules.tune_sigma1(np.zeros((1, 3)))


def test_tune_sigma1_random_pairs_is_lower_bound():
    x = np.random.default_rng(0).standard_normal((3000, 4))
    exact = schedules.tune_sigma1(x, max_exact=5000)
    approx = schedules.tune_sigma1(x, max_exact=100, n_pairs=200_000)
    assert approx <= exact + 1e-12
    assert approx > 0.8 * exact


def test_tune_sigma1_gff_natural_image_scale():
    # natural images have roughly a 1/|k|^2 power spectrum, i.e. GFF(γ=1) statistics;
    # pixel std 0.5 in [-1, 1] puts the whitened distance near 0.5 √(2·3072) ≈ 39
    cov = gff.build(32, 1.0, 3)
    rng = np.random.default_rng(1)
    imgs = np.clip(0.5 * gff.sample(cov, rng, 500), -1, 1)
    s1 = schedules.tune_sigma1(imgs, cov)
    assert 10 < s1 < 100


def test_tune_gamma_reference_dimension():
    g = schedules.tune_gamma(3072)
    assert 1.035 <= g <= 1.045
    assert schedules.radial_overlap(g, 3072) == pytest.approx(0.5, abs=1e-9)
    assert schedules.radial_overlap(1.0376, 3072) == pytest.approx(0.566, abs=2e-3)


@given(st.integers(100, 20000), st.floats(0.05, 0.99))
@settings(max_examples=60)
def test_tune_gamma_root_property(D, target):
    g = schedules.tune_gamma(D, target)
    assert g > 1
    assert schedules.radial_overlap(g, D) == pytest.approx(target, abs=1e-6)


def test_tune_gamma_monotone_in_target_and_dimension():
    gs = [schedules.tune_gamma(3072, c) for c in (0.2, 0.5, 0.9)]
    assert gs[0] > gs[1] > gs[2]
    assert schedules.tune_gamma(30000) < schedules.tune_gamma(3072)
    assert schedules.tune_gamma(3072, 0.99) < 1.01


def test_tune_gamma_rejects():
    with pytest.raises(ValueError):
        schedules.tune_gamma(1, 0.5)  # overlap stays near 1 over the whole bracket
    with pytest.raises(ValueError):
        schedules.tune_gamma(3072, 1.5)


def test_tune_num_scales_examples():
    assert schedules.tune_num_scales(20, 0.01, 1.0376) == 207
    assert schedules.tune_num_scales(50, 0.01, 1.0376) == 232
    assert schedules.tune_num_scales(0.5, 0.5, 1.1) == 1
    with pytest.raises(ValueError):
        schedules.tune_num_scales(0.1, 1.0, 1.1)
    with pytest.raises(ValueError):
        schedules.tune_num_scales(1.0, 0.1, 1.0)


@given(st.floats(1e-3, 1.0), st.floats(1.001, 1.5), st.integers(1, 400))
def test_tune_num_scales_inverts_ladder(sL, gamma, k):
    assert schedules.tune_num_scales(sL * gamma**k, sL, gamma) == k + 1


def test_langevin_terminal_variance_examples():
    assert schedules.langevin_terminal_variance(1.0376, 0.0, 0.01, 5) == pytest.approx(1.0376**2)
    # hand evaluation: a = 0.062, p² = 0.879844, γ² p¹⁰ + 2a (1 - p¹⁰)/(1 - p²)
    r = schedules.langevin_terminal_variance(1.0376, 6.2e-6, 0.01, 5)
    p2 = (1 - 0.062) ** 2
    hand = 1.0376**2 * p2**5 + 2 * 0.062 * (1 - p2**5) / (1 - p2)
    assert r == pytest.approx(hand, rel=1e-12)
    assert r == pytest.approx(1.0555, abs=1e-3)
    with pytest.raises(ValueError):
        schedules.langevin_terminal_variance(1.0376, 1e-4, 0.01, 5)


@given(st.floats(1.001, 1.2), st.floats(0.0, 0.9), st.integers(1, 30))
@settings(max_examples=60)
def test_langevin_terminal_variance_matches_recursion(gamma, a, T):
    sm = 0.1
    eps = a * sm**2
    v = gamma**2
    for _ in range(T):
        v = (1 - a) ** 2 * v + 2 * a
    assert schedules.langevin_terminal_variance(gamma, eps, sm, T) == pytest.approx(v, rel=1e-10)


def test_langevin_terminal_variance_per_mode():
    cov = DenseCovariance(np.diag([0.5, 1.0, 2.0]))
    r = schedules.langevin_terminal_variance(1.05, 1e-5, 0.01, 5, cov)
    assert r.shape == (3,)
    for lam, ri in zip((0.5, 1.0, 2.0), r):
        a = 1e-5 / 0.01**2
        v = 1.05**2 * lam
        for _ in range(5):
            v = (1 - a / lam) ** 2 * v + 2 * a * lam
        assert ri == pytest.approx(v, rel=1e-10)


def test_lang_config_step_size():
    c = schedules.LangevinConfig(2e-5, 5)
    assert c.step_size(0.01, 0.01) == pytest.approx(2e-5)
    assert c.step_size(0.1, 0.01) == pytest.approx(2e-3)
    with pytest.raises(ValueError):
        schedules.LangevinConfig(0.0, 5)
    with pytest.raises(ValueError):
        schedules.LangevinConfig(1e-5, 0)


def test_tune_langevin_eps_isotropic():
    e5 = schedules.tune_langevin_eps(1.0376, 0.01, 5)
    assert 5e-6 <= e5 <= 8e-6
    rep = schedules.tune_langevin_eps_report(1.0376, 0.01, 5)
    # the ratio cannot reach 1 for this γ, so the tuner returns the closest point
    assert 1.0 < rep.mean_ratio < 1.07
    eps_grid = np.geomspace(1e-7, 9.9e-5, 400)
    best = min(abs(schedules.langevin_terminal_variance(1.0376, e, 0.01, 5) - 1) for e in eps_grid)
    assert abs(rep.mean_ratio - 1) <= best + 1e-9
    assert schedules.tune_langevin_eps(1.0376, 0.01, 1) > e5


def test_tune_langevin_eps_reaches_target_when_possible():
    rep = schedules.tune_langevin_eps_report(1.0376, 0.01, 5, target=1.2)
    assert rep.mean_ratio == pytest.approx(1.2, abs=1e-8)


@given(st.floats(1.001, 1.2), st.floats(0.0, 0.99), st.integers(1, 200))
def test_isotropic_terminal_ratio_exceeds_one(gamma, a, T):
    # a convex mix of γ² and the discretised stationary value 1/(1 - a/2)
    assert schedules.langevin_terminal_variance(gamma, a * 0.01**2, 0.01, T) > 1.0


def test_tune_langevin_eps_gff():
    cov = gff.build(32, 1.0, 3)
    e5 = schedules.tune_langevin_eps(1.0376, 0.01, 5, cov)
    assert 3.1e-7 / 3 <= e5 <= 3 * 3.1e-7
    e1 = schedules.tune_langevin_eps(1.0376, 0.01, 1, cov)
    assert 3e-7 <= e1 <= 3e-6
    rep = schedules.tune_langevin_eps_report(1.0376, 0.01, 5, cov)
    assert rep.min_ratio <= rep.mean_ratio <= rep.max_ratio
    assert e5 < 0.999 * 0.01**2 * cov.eigenvalues().min()
    assert math.isfinite(rep.mean_ratio)
