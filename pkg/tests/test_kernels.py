import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddkl import gff, kernels, schedules
from ddkl.covariance import IDENTITY, DenseCovariance
from ddkl.kernels import VEProcess, VPProcess

SCHED = schedules.make_linear_beta(1000, 1e-4, 0.02)
VP = VPProcess(SCHED)
# ᾱ_1 = 0.9, ᾱ_2 = 0.882
TWO = VPProcess(schedules.DiscreteVPSchedule.from_betas([0.1, 0.02]))


def test_forward_marginal_examples():
    x0 = np.array([1.0, -2.0])
    assert np.allclose(kernels.forward_marginal(VP, x0, 500, np.zeros(2)), math.sqrt(SCHED.alpha_bar(500)) * x0)
    half = VPProcess(schedules.DiscreteVPSchedule.from_betas([0.5]))
    assert kernels.forward_marginal(half, 2.0, 1, 1.0) == pytest.approx(math.sqrt(0.5) * 3.0)
    ve = VEProcess(schedules.make_geometric_sigma(1.0, 2.0, 2))
    assert kernels.forward_marginal(ve, 0.0, 2, 0.7) == pytest.approx(1.4)
    with pytest.raises(IndexError):
        kernels.forward_marginal(VP, x0, 0, x0)


def test_forward_transition_examples():
    tiny = VPProcess(schedules.DiscreteVPSchedule.from_betas([1e-300]))
    assert kernels.forward_transition(tiny, 1.25, 1, 3.0) == pytest.approx(1.25, abs=1e-12)
    # composition of two noiseless steps scales by √ᾱ_2
    x = kernels.forward_transition(TWO, 1.0, 1, 0.0)
    x = kernels.forward_transition(TWO, x, 2, 0.0)
    assert x == pytest.approx(math.sqrt(0.882))
    ve = VEProcess(schedules.make_geometric_sigma(1.0, 2.0, 2))
    assert kernels.forward_transition(ve, 0.0, 2, 1.0) == pytest.approx(math.sqrt(3.0))


def test_transition_matches_marginal_moments():
    rng = np.random.default_rng(0)
    n = 100_000
    x = np.zeros(n) + 2.0
    for t in range(1, 201):
        x = kernels.forward_transition(VP, x, t, rng.standard_normal(n))
    ab = SCHED.alpha_bar(200)
    assert x.mean() == pytest.approx(2.0 * math.sqrt(ab), rel=0.02)
    assert x.var() == pytest.approx(1 - ab, rel=0.02)
    ve = VEProcess(schedules.make_geometric_sigma(0.1, 3.0, 20))
    y = np.zeros(n)
    for i in range(1, 21):
        if i == 1:
            y = y + 0.1 * rng.standard_normal(n)
        else:
            y = kernels.forward_transition(ve, y, i, rng.standard_normal(n))
    assert y.var() == pytest.approx(9.0, rel=0.02)


def test_score_examples():
    assert np.array_equal(kernels.score(VP, np.array([0.3]) * math.sqrt(SCHED.alpha_bar(10)), [0.3], 10), [0.0])
    half = VPProcess(schedules.DiscreteVPSchedule.from_betas([0.5]))
    xt = kernels.forward_marginal(half, 0.0, 1, 1.0)
    assert kernels.score(half, xt, 0.0, 1) == pytest.approx(-math.sqrt(2.0), abs=1e-5)


@given(st.integers(1, 1000), st.integers(0, 10_000))
@settings(max_examples=60)
def test_score_noise_identity(t, seed):
    rng = np.random.default_rng(seed)
    cov = DenseCovariance([[1.0, 0.3, 0.0], [0.3, 2.0, 0.5], [0.0, 0.5, 1.5]])
    for proc in (VP, VPProcess(SCHED, cov)):
        x0 = rng.standard_normal(3)
        e = rng.standard_normal(3)
        xt = kernels.forward_marginal(proc, x0, t, e)
        assert np.allclose(kernels.score(proc, xt, x0, t), kernels.score_from_eps(proc, e, t), atol=1e-10, rtol=0)


def test_score_noise_identity_ve_gff():
    cov = gff.build(4, 1.0)
    ve = VEProcess(schedules.make_geometric_sigma(0.05, 5.0, 30), cov)
    rng = np.random.default_rng(1)
    x0 = rng.standard_normal((4, 4))
    e = rng.standard_normal((4, 4))
    xi = kernels.forward_marginal(ve, x0, 17, e)
    assert np.allclose(kernels.score(ve, xi, x0, 17), kernels.score_from_eps(ve, e, 17), atol=1e-9)


def test_x0_estimate_inverts_marginal():
    rng = np.random.default_rng(2)
    cov = gff.build(4, 1.0)
    proc = VPProcess(SCHED, cov)
    x0 = rng.standard_normal((4, 4))
    e = rng.standard_normal((4, 4))
    xt = kernels.forward_marginal(proc, x0, 700, e)
    assert np.allclose(kernels.x0_estimate(proc, xt, e, 700), x0, atol=1e-10)


def test_posterior_hand_example():
    x0, e = 1.0, 0.5
    xt = math.sqrt(0.882) * x0 + math.sqrt(0.118) * e
    post = kernels.posterior(TWO, xt, x0, 2)
    assert float(post.mu_tilde) == pytest.approx(1.0928, abs=1e-4)
    assert post.beta_tilde == pytest.approx(0.016949, abs=1e-6)
    assert post.beta_tilde == pytest.approx(TWO.schedule.beta_tilde(2))
    assert float(kernels.posterior_mean_from_eps(TWO, xt, e, 2)) == pytest.approx(float(post.mu_tilde), abs=1e-12)


def test_posterior_first_step_is_deterministic():
    post = kernels.posterior(VP, np.array([0.4]), np.array([1.5]), 1)
    assert post.beta_tilde == 0.0 and post.mu_tilde.tolist() == [1.5]
    with pytest.raises(IndexError):
        kernels.posterior(VP, 0.0, 0.0, 5, t_prev=5)


@given(st.integers(2, 1000), st.integers(0, 10_000))
@settings(max_examples=100)
def test_posterior_two_forms_agree(t, seed):
    rng = np.random.default_rng(seed)
    cov = DenseCovariance([[2.0, -0.4], [-0.4, 0.7]])
    for proc in (VP, VPProcess(SCHED, cov)):
        x0 = rng.standard_normal(2)
        e = rng.standard_normal(2)
        xt = kernels.forward_marginal(proc, x0, t, e)
        long = kernels.posterior(proc, xt, x0, t).mu_tilde
        assert np.allclose(long, kernels.posterior_mean_from_eps(proc, xt, e, t), atol=1e-8, rtol=0)


def test_posterior_skip_matches_composed_forward():
    # with t_prev < t-1 the effective β is 1 - ᾱ_t/ᾱ_{t_prev}; the posterior is then the
    # Gaussian conditional of the joint (x_{t_prev}, x_t) given x_0
    t, s = 800, 600
    ab_t, ab_s = SCHED.alpha_bar(t), SCHED.alpha_bar(s)
    x0, xt = 0.7, -0.2
    # joint covariance of (x_s, x_t) given x0 with x_t = √(ab_t/ab_s) x_s + noise
    r = math.sqrt(ab_t / ab_s)
    c_st = r * (1 - ab_s)
    mean = math.sqrt(ab_s) * x0 + c_st / (1 - ab_t) * (xt - math.sqrt(ab_t) * x0)
    var = (1 - ab_s) - c_st**2 / (1 - ab_t)
    post = kernels.posterior(VP, xt, x0, t, t_prev=s)
    assert float(post.mu_tilde) == pytest.approx(mean, abs=1e-12)
    assert post.beta_tilde == pytest.approx(var, rel=1e-10)


def test_ni_identity_equals_isotropic_exactly():
    ni = VPProcess(SCHED, DenseCovariance(np.eye(3)))
    rng = np.random.default_rng(3)
    x0, e = rng.standard_normal((2, 3))
    for t in (1, 10, 999):
        xt = kernels.forward_marginal(VP, x0, t, e)
        assert np.array_equal(kernels.forward_marginal(ni, x0, t, e), xt)
        assert np.array_equal(kernels.score(ni, xt, x0, t), kernels.score(VP, xt, x0, t))
        assert np.array_equal(kernels.x0_estimate(ni, xt, e, t), kernels.x0_estimate(VP, xt, e, t))


def test_expected_denoised_sample():
    rng = np.random.default_rng(4)
    x0, e = rng.standard_normal((2, 5))
    ve = VEProcess(schedules.make_geometric_sigma(0.1, 10.0, 50))
    xi = kernels.forward_marginal(ve, x0, 30, e)
    assert np.allclose(kernels.expected_denoised_sample(ve, xi, 30, eps=e), x0)
    assert np.allclose(kernels.expected_denoised_sample(ve, xi, 30, score=kernels.score(ve, xi, x0, 30)), x0)
    # VP: x_t + (1-ᾱ) s = √ᾱ x0 for the conditional score
    xt = kernels.forward_marginal(VP, x0, 300, e)
    ab = SCHED.alpha_bar(300)
    assert np.allclose(kernels.expected_denoised_sample(VP, xt, 300, eps=e), math.sqrt(ab) * x0)
    assert np.allclose(kernels.expected_denoised_sample(VP, xt, 300, score=kernels.score(VP, xt, x0, 300)), math.sqrt(ab) * x0)
    with pytest.raises(ValueError):
        kernels.expected_denoised_sample(VP, xt, 300)


def test_expected_denoised_sample_gaussian_prior():
    # for x0 ~ N(0, s² I) the marginal score is exact and Tweedie gives the posterior mean
    s2, sig = 4.0, 1.5
    ve = VEProcess(schedules.make_geometric_sigma(0.5, sig, 2))
    x = np.array([1.0, -3.0])
    score = -x / (s2 + sig**2)
    assert np.allclose(kernels.expected_denoised_sample(ve, x, 2, score=score), s2 / (s2 + sig**2) * x)


def test_sde_marginals():
    s = schedules.ContinuousVPSchedule(0.1, 20.0)
    m0 = kernels.sde_marginal("VP", s, 0.0)
    assert (m0.mean_coef, m0.var_coef) == (1.0, 0.0)
    m1 = kernels.sde_marginal("VP", s, 1.0)
    assert m1.mean_coef == pytest.approx(math.exp(-5.025), rel=1e-12)
    assert m1.var_coef == pytest.approx(1 - math.exp(-10.05), rel=1e-12)
    cov = gff.build(4, 1.0)
    ni = kernels.sde_marginal("NIVP", s, 0.5, cov)
    assert ni.cov is cov and ni.mean_coef == pytest.approx(math.exp(-0.5 * 2.5375))
    assert kernels.sde_marginal("VP", s, 0.5, cov).cov is IDENTITY
    sig = kernels.geometric_sigma_fn(0.01, 50.0)
    assert kernels.sde_marginal("VE", sig, 1.0).var_coef == pytest.approx(2500.0)
    assert kernels.sde_marginal("NIVE", sig, 0.0, cov).var_coef == pytest.approx(1e-4)
    with pytest.raises(ValueError):
        kernels.sde_marginal("VP", s, 1.5)
    with pytest.raises(ValueError):
        kernels.sde_marginal("sub-VP", s, 0.5)


def test_discrete_chain_approaches_sde_in_log_domain():
    # L β_t ≈ β(t/L): the log of the running product tracks -∫β
    s = schedules.ContinuousVPSchedule(0.1, 20.0)
    L = 1000
    disc = schedules.make_linear_beta(L, 0.1 / L, 20.0 / L)
    for t in (0.1, 0.5, 1.0):
        k = int(t * L)
        assert -math.log(disc.alpha_bar(k)) == pytest.approx(schedules.beta_integral(s, t), rel=0.01)


def test_sde_marginal_monte_carlo():
    # Euler-Maruyama on dx = -β/2 x dt + √β dW reproduces the closed form
    s = schedules.ContinuousVPSchedule(0.1, 20.0)
    rng = np.random.default_rng(5)
    n, steps = 50_000, 1000
    x = np.full(n, 2.0)
    dt = 0.5 / steps
    for k in range(steps):
        b = s.beta(k * dt)
        x = x - 0.5 * b * x * dt + math.sqrt(b * dt) * rng.standard_normal(n)
    m = kernels.sde_marginal("VP", s, 0.5)
    assert x.mean() == pytest.approx(2.0 * m.mean_coef, abs=0.02)
    assert x.var() == pytest.approx(m.var_coef, rel=0.03)


def test_harmonic_sigma_and_correction():
    assert kernels.harmonic_sigma([2.0, 2.0, 2.0]) == pytest.approx(2.0)
    assert kernels.harmonic_sigma([1.0, 2.0]) == pytest.approx(4.0 / 3.0)
    sh, fac = kernels.smld_uncond_score_correction([1.0, 2.0])
    assert sh == pytest.approx(4 / 3)
    assert fac == pytest.approx([4 / 3, 1 / 3])
    s = np.array([0.5, -1.0])
    assert np.allclose(kernels.corrected_conditional_score(IDENTITY, s, sh, sh), s / sh)
    with pytest.raises(ValueError):
        kernels.harmonic_sigma([])
