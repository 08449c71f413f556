"""Closed-form diffusion kernels for VP (DDPM) and VE (SMLD) processes.

Every formula is written once with a covariance operator; passing
:data:`~ddkl.covariance.IDENTITY` gives the isotropic version through
the same code path.

VP, time ``t = 1..L``::

    x_t   = √ᾱ_t x_0 + √(1-ᾱ_t) √Σ ε
    score = -Σ⁻¹ (x_t - √ᾱ_t x_0) / (1-ᾱ_t) = -√Σ⁻¹ ε / √(1-ᾱ_t)

VE, level ``i = 1..L``::

    x_i   = x_0 + σ_i √Σ ε
    score = -Σ⁻¹ (x_i - x_0) / σ_i²
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import IDENTITY
from .schedules import ContinuousVPSchedule, DiscreteVPSchedule, GeometricVESchedule, beta_integral


@dataclass(frozen=True)
class VPProcess:
    schedule: DiscreteVPSchedule
    cov: object = IDENTITY

    @property
    def L(self) -> int:
        return self.schedule.L


@dataclass(frozen=True)
class VEProcess:
    schedule: GeometricVESchedule
    cov: object = IDENTITY

    @property
    def L(self) -> int:
        return self.schedule.L


@dataclass(frozen=True)
class PosteriorParams:
    """Gaussian ``q(x_{t-1} | x_t, x_0) = N(mu_tilde, beta_tilde Σ)``."""

    mu_tilde: np.ndarray
    beta_tilde: float


def _arr(x):
    return np.asarray(x, dtype=float)


def _check_index(proc, t: int) -> int:
    t = int(t)
    if not 1 <= t <= proc.L:
        raise IndexError(f"index {t} outside [1, {proc.L}]")
    return t


def forward_marginal(proc, x0, t: int, eps):
    t = _check_index(proc, t)
    x0, eps = _arr(x0), _arr(eps)
    noise = proc.cov.apply_sqrt_sigma(eps)
    if isinstance(proc, VPProcess):
        ab = proc.schedule.alpha_bar(t)
        return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * noise
    return x0 + proc.schedule.sigma(t) * noise


def forward_transition(proc, x_prev, t: int, noise):
    """One forward step ``x_{t-1} -> x_t`` driven by standard-normal ``noise``."""
    t = _check_index(proc, t)
    x_prev = _arr(x_prev)
    z = proc.cov.apply_sqrt_sigma(_arr(noise))
    if isinstance(proc, VPProcess):
        b = proc.schedule.beta(t)
        return math.sqrt(1.0 - b) * x_prev + math.sqrt(b) * z
    s = proc.schedule
    return x_prev + math.sqrt(s.sigma(t) ** 2 - s.sigma(t - 1) ** 2) * z


def score(proc, x_t, x0, t: int):
    """Score of the conditional marginal ``∇ log q(x_t | x_0)``."""
    t = _check_index(proc, t)
    x_t, x0 = _arr(x_t), _arr(x0)
    if isinstance(proc, VPProcess):
        ab = proc.schedule.alpha_bar(t)
        return -proc.cov.apply_inv_sigma(x_t - math.sqrt(ab) * x0) / (1.0 - ab)
    return -proc.cov.apply_inv_sigma(x_t - x0) / proc.schedule.sigma(t) ** 2


def score_from_eps(proc, eps, t: int):
    """``-√Σ⁻¹ ε / √(1-ᾱ_t)`` (VP) or ``-√Σ⁻¹ ε / σ_i`` (VE)."""
    t = _check_index(proc, t)
    w = proc.cov.apply_inv_sqrt_sigma(_arr(eps))
    if isinstance(proc, VPProcess):
        return -w / math.sqrt(1.0 - proc.schedule.alpha_bar(t))
    return -w / proc.schedule.sigma(t)


def x0_estimate(proc: VPProcess, x_t, eps_hat, t: int):
    """``x̂_0 = (x_t - √(1-ᾱ_t) √Σ ε̂) / √ᾱ_t``."""
    t = _check_index(proc, t)
    ab = proc.schedule.alpha_bar(t)
    return (_arr(x_t) - math.sqrt(1.0 - ab) * proc.cov.apply_sqrt_sigma(_arr(eps_hat))) / math.sqrt(ab)


def _posterior_coefficients(sched: DiscreteVPSchedule, t: int, t_prev: int):
    ab_t = sched.alpha_bar(t)
    ab_p = sched.alpha_bar(t_prev)
    # effective single-step beta between the two visited indices
    b = 1.0 - ab_t / ab_p
    c0 = math.sqrt(ab_p) * b / (1.0 - ab_t)
    ct = math.sqrt(1.0 - b) * (1.0 - ab_p) / (1.0 - ab_t)
    var = (1.0 - ab_p) / (1.0 - ab_t) * b
    return c0, ct, var, b


def posterior(proc: VPProcess, x_t, x0, t: int, t_prev: int | None = None) -> PosteriorParams:
    """Mean and variance of ``q(x_{t_prev} | x_t, x_0)`` (``t_prev = t-1`` by default).

    At ``t = 1`` the reverse step is deterministic: ``(x_0, 0)``.
    """
    t = _check_index(proc, t)
    t_prev = t - 1 if t_prev is None else int(t_prev)
    if not 0 <= t_prev < t:
        raise IndexError(f"t_prev={t_prev} must lie in [0, {t})")
    x_t, x0 = _arr(x_t), _arr(x0)
    if t_prev == 0:
        return PosteriorParams(x0.copy(), 0.0)
    c0, ct, var, _ = _posterior_coefficients(proc.schedule, t, t_prev)
    return PosteriorParams(c0 * x0 + ct * x_t, var)


def posterior_mean_from_eps(proc: VPProcess, x_t, eps, t: int):
    """Simplified mean ``(x_t - β_t/√(1-ᾱ_t) √Σ ε) / √(1-β_t)``."""
    t = _check_index(proc, t)
    b = proc.schedule.beta(t)
    ab = proc.schedule.alpha_bar(t)
    return (_arr(x_t) - b / math.sqrt(1.0 - ab) * proc.cov.apply_sqrt_sigma(_arr(eps))) / math.sqrt(1.0 - b)


def expected_denoised_sample(proc, x_t, t: int, *, eps=None, score=None):
    """Tweedie estimate ``x_t + v Σ s`` with ``v = 1-ᾱ_t`` (VP) or ``σ_i²`` (VE).

    Give either the score ``s`` or the noise prediction ``eps``.  For VP
    this is ``√ᾱ_t x̂_0``; for VE it is ``E[x_0 | x_i]``.
    """
    t = _check_index(proc, t)
    if (eps is None) == (score is None):
        raise ValueError("pass exactly one of eps= or score=")
    x_t = _arr(x_t)
    if isinstance(proc, VPProcess):
        v = 1.0 - proc.schedule.alpha_bar(t)
    else:
        v = proc.schedule.sigma(t) ** 2
    if score is not None:
        return x_t + v * proc.cov.apply_sigma(_arr(score))
    return x_t - math.sqrt(v) * proc.cov.apply_sqrt_sigma(_arr(eps))


@dataclass(frozen=True)
class SDEMarginal:
    """``p_0t(x(t) | x(0)) = N(mean_coef x(0), var_coef Σ)``."""

    mean_coef: float
    var_coef: float
    cov: object = IDENTITY


def geometric_sigma_fn(sigma_min: float, sigma_max: float):
    """Continuous VE scale ``σ(t) = σ_min (σ_max/σ_min)^t``."""
    return lambda t: sigma_min * (sigma_max / sigma_min) ** t


def sde_marginal(kind: str, schedule, t: float, cov=IDENTITY) -> SDEMarginal:
    """Closed-form transition of the VP/VE SDE and their non-isotropic variants.

    ``schedule`` is a :class:`ContinuousVPSchedule` for ``VP``/``NIVP`` and
    a callable ``σ(t)`` for ``VE``/``NIVE``.  The isotropic kinds ignore
    ``cov``.
    """
    kind = kind.upper()
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    c = cov if kind.startswith("NI") else IDENTITY
    if kind in ("VP", "NIVP"):
        if not isinstance(schedule, ContinuousVPSchedule):
            raise TypeError("VP kinds need a ContinuousVPSchedule")
        B = beta_integral(schedule, t)
        return SDEMarginal(math.exp(-0.5 * B), -math.expm1(-B), c)
    if kind in ("VE", "NIVE"):
        return SDEMarginal(1.0, float(schedule(t)) ** 2, c)
    raise ValueError(f"unknown SDE kind {kind!r}")


def harmonic_sigma(sigmas) -> float:
    s = np.asarray(sigmas, dtype=float)
    if s.size == 0:
        raise ValueError("empty sigma ladder")
    return float(1.0 / np.mean(1.0 / s))


def smld_uncond_score_correction(sigmas):
    """Harmonic mean ``σ_H`` and per-level factors ``σ_H / σ_i²``.

    A conditional score is recovered from an unconditional model ``s(x)``
    as ``(σ_H/σ_i²) √Σ⁻¹ s(x)``; see :func:`corrected_conditional_score`.
    """
    s = np.asarray(sigmas, dtype=float)
    sh = harmonic_sigma(s)
    return sh, sh / s**2


def corrected_conditional_score(cov, s_uncond, sigma_i: float, sigma_H: float):
    return sigma_H / sigma_i**2 * cov.apply_inv_sqrt_sigma(_arr(s_uncond))
