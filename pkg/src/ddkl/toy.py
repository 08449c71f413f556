"""Synthetic datasets for the end-to-end toy experiments.

``eight_gaussians``
    an equal-weight mixture of 8 isotropic Gaussians on a circle; its
    noised marginals are again mixtures, so the optimal ε-predictor and
    score are available in closed form.
``moving_pulse``
    a 1-D "video": a smooth bump circling a ring of pixels at constant
    integer speed, so frames are a deterministic function of the past.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp


def eight_gaussian_centers(radius: float = 2.0) -> np.ndarray:
    a = 2.0 * np.pi * np.arange(8) / 8
    return radius * np.stack([np.cos(a), np.sin(a)], axis=1)


def eight_gaussians(rng, n: int, *, radius: float = 2.0, std: float = 0.2, cov=None) -> np.ndarray:
    """``n`` draws from the mixture; ``cov`` (a 2x2 matrix) replaces ``std² I``."""
    c = eight_gaussian_centers(radius)
    idx = rng.integers(0, 8, size=n)
    z = rng.standard_normal((n, 2))
    if cov is None:
        return c[idx] + std * z
    return c[idx] + z @ np.linalg.cholesky(np.asarray(cov, dtype=float)).T


def eight_gaussians_moments(radius: float = 2.0, std: float = 0.2):
    """Exact mean and covariance of the isotropic mixture."""
    return np.zeros(2), (radius**2 / 2.0 + std**2) * np.eye(2)


def assign_modes(x, radius: float = 2.0) -> np.ndarray:
    """Index of the nearest mixture center for each row of ``x``."""
    c = eight_gaussian_centers(radius)
    d = ((np.asarray(x)[:, None, :] - c[None]) ** 2).sum(-1)
    return d.argmin(axis=1)


def mixture_score(x, mean_scale: float, noise_var: float, *, radius: float = 2.0, std: float = 0.2) -> np.ndarray:
    """Score of the noised mixture ``Σ_k N(a c_k, (a² std² + v) I) / 8``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    m = mean_scale * eight_gaussian_centers(radius)
    v = mean_scale**2 * std**2 + noise_var
    d = x[:, None, :] - m[None]
    logw = -0.5 * (d**2).sum(-1) / v
    w = np.exp(logw - logsumexp(logw, axis=1, keepdims=True))
    return -(w[..., None] * d).sum(1) / v


def mixture_eps(x_t, alpha_bar: float, **kw) -> np.ndarray:
    """Optimal ``E[ε | x_t]`` under the isotropic VP marginal at ``ᾱ``."""
    return -math.sqrt(1.0 - alpha_bar) * mixture_score(x_t, math.sqrt(alpha_bar), 1.0 - alpha_bar, **kw)


def mixture_score_ve(x, sigma: float, **kw) -> np.ndarray:
    """Score under the isotropic VE marginal at noise level ``sigma``."""
    return mixture_score(x, 1.0, sigma**2, **kw)


# --------------------------------------------------------------------------
# moving pulse video
# --------------------------------------------------------------------------


def pulse_frame(pos, width: int, sharpness: float = 1.0) -> np.ndarray:
    """Bump centered at ``pos`` on a ring of ``width`` pixels, scaled to [-1, 1]."""
    pos = np.asarray(pos, dtype=float)
    j = np.arange(width)
    d = np.abs(j - pos[..., None]) % width
    d = np.minimum(d, width - d)
    return 2.0 * np.exp(-0.5 * (d / sharpness) ** 2) - 1.0


def moving_pulse(rng, n: int, frames: int, width: int = 16, *, speeds=(-1, 1)) -> np.ndarray:
    """``n`` sequences of shape ``(frames, width)`` with random start and speed."""
    start = rng.integers(0, width, size=n)
    v = np.asarray(speeds)[rng.integers(0, len(speeds), size=n)]
    pos = start[:, None] + v[:, None] * np.arange(frames)[None]
    return pulse_frame(pos % width, width)
