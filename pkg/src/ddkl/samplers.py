"""Reverse-process samplers.

``eps_fn(x_t, t)`` predicts noise for VP chains; ``score_fn(x, i)``
returns the score at VE level ``i``.  Randomness always comes from an
explicit ``numpy.random.Generator`` so every chain is reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .kernels import VEProcess, VPProcess
from .schedules import even_subsequence

SAMPLER_KINDS = ("ancestral_tilde", "ancestral_beta", "ddim", "als", "cas")


class SamplerError(FloatingPointError):
    pass


@dataclass(frozen=True)
class SamplerSpec:
    kind: str
    steps: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        s = np.asarray(self.steps, dtype=int)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("steps must be a non-empty vector")
        if s[-1] != 1:
            raise ValueError("step subsequence must end at 1")
        if np.any(np.diff(s) >= 0):
            raise ValueError("step subsequence must be strictly decreasing")
        object.__setattr__(self, "steps", s)

    @classmethod
    def evenly(cls, kind: str, L: int, n: int, seed: int = 0) -> "SamplerSpec":
        return cls(kind, even_subsequence(L, n), seed)

    def validate_for(self, L: int) -> None:
        if self.steps[0] != L:
            raise ValueError(f"step subsequence must start at L={L}, got {self.steps[0]}")


# --------------------------------------------------------------------------
# VP steps
# --------------------------------------------------------------------------


def ancestral_step(proc: VPProcess, x_t, eps_hat, t: int, variant: str = "tilde", *, t_prev=None, z=None, rng=None):
    """Two-stage DDPM step: estimate ``x̂_0``, then sample the posterior.

    ``variant="tilde"`` injects ``√β̃ √Σ z``; ``variant="beta"`` uses the
    forward step variance ``√β √Σ z`` instead.  Both share the mean.  The
    last step (``t_prev = 0``) returns ``x̂_0`` without noise.
    """
    if variant not in ("tilde", "beta"):
        raise ValueError(f"unknown ancestral variant {variant!r}")
    t_prev = t - 1 if t_prev is None else int(t_prev)
    x0_hat = kernels.x0_estimate(proc, x_t, eps_hat, t)
    if t_prev == 0:
        return x0_hat
    post = kernels.posterior(proc, x_t, x0_hat, t, t_prev)
    _, _, var_tilde, b = kernels._posterior_coefficients(proc.schedule, t, t_prev)
    var = var_tilde if variant == "tilde" else b
    if z is None:
        if rng is None:
            raise ValueError("need either z or rng to inject noise")
        z = rng.standard_normal(np.shape(x_t))
    return post.mu_tilde + math.sqrt(var) * proc.cov.apply_sqrt_sigma(np.asarray(z, dtype=float))


def ddim_step(proc: VPProcess, x_t, eps_hat, t: int, t_prev: int):
    """Deterministic ``x_{t_prev} = √ᾱ_{t_prev} x̂_0 + √(1-ᾱ_{t_prev}) √Σ ε̂``."""
    if t_prev > t:
        raise ValueError("t_prev must not exceed t")
    if t_prev == t:
        return np.asarray(x_t, dtype=float)
    ab_p = proc.schedule.alpha_bar(t_prev)
    x0_hat = kernels.x0_estimate(proc, x_t, eps_hat, t)
    return math.sqrt(ab_p) * x0_hat + math.sqrt(1.0 - ab_p) * proc.cov.apply_sqrt_sigma(np.asarray(eps_hat, dtype=float))


def clipped_eps(proc: VPProcess, x_t, eps_hat, t: int, lo: float, hi: float):
    """Noise prediction consistent with ``x̂_0`` clamped to ``[lo, hi]``."""
    ab = proc.schedule.alpha_bar(t)
    x0_hat = np.clip(kernels.x0_estimate(proc, x_t, eps_hat, t), lo, hi)
    return proc.cov.apply_inv_sqrt_sigma(x_t - math.sqrt(ab) * x0_hat) / math.sqrt(1.0 - ab)


def sample_vp(proc: VPProcess, eps_fn: Callable, spec: SamplerSpec, shape, *, rng=None, x_init=None, trajectory=False, clip_x0=None):
    """Run an ancestral or DDIM chain over ``spec.steps`` and then down to 0.

    ``clip_x0=(lo, hi)`` clamps every ``x̂_0`` to the data range and uses
    the matching noise prediction; off by default.
    """
    if spec.kind not in ("ancestral_tilde", "ancestral_beta", "ddim"):
        raise ValueError(f"{spec.kind!r} is not a VP sampler")
    spec.validate_for(proc.L)
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    if x_init is None:
        x = proc.cov.apply_sqrt_sigma(rng.standard_normal(shape))
    else:
        x = np.asarray(x_init, dtype=float)
    steps = list(spec.steps) + [0]
    visited = [(int(steps[0]), x)]
    for t, t_prev in zip(steps[:-1], steps[1:]):
        eps_hat = eps_fn(x, int(t))
        if clip_x0 is not None:
            eps_hat = clipped_eps(proc, x, eps_hat, int(t), *clip_x0)
        if spec.kind == "ddim":
            x = ddim_step(proc, x, eps_hat, int(t), int(t_prev))
        else:
            variant = "tilde" if spec.kind == "ancestral_tilde" else "beta"
            x = ancestral_step(proc, x, eps_hat, int(t), variant, t_prev=int(t_prev), rng=rng)
        if not np.all(np.isfinite(x)):
            raise SamplerError(f"non-finite state after step t={t}")
        if trajectory:
            visited.append((int(t_prev), x))
    return visited if trajectory else x


# --------------------------------------------------------------------------
# VE samplers
# --------------------------------------------------------------------------


def annealed_langevin(proc: VEProcess, score_fn: Callable, M: int, eps: float, rng, *, shape=None, x_init=None, snapshots=False):
    """Annealed Langevin sampling over levels ``L..1`` with ``M`` inner steps.

    ``x ← x + α_i s(x, i) + √(2α_i) √Σ z`` with ``α_i = ε σ_i²/σ_min²``.
    The chain starts from ``N(0, σ_max² Σ)``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    sched = proc.schedule
    if x_init is None:
        if shape is None:
            raise ValueError("need shape or x_init")
        x = sched.sigma_max * proc.cov.apply_sqrt_sigma(rng.standard_normal(shape))
    else:
        x = np.asarray(x_init, dtype=float).copy()
    snaps = []
    for i in range(sched.L, 0, -1):
        alpha = eps * sched.sigma(i) ** 2 / sched.sigma_min**2
        for m in range(M):
            z = proc.cov.apply_sqrt_sigma(rng.standard_normal(x.shape))
            x = x + alpha * score_fn(x, i) + math.sqrt(2.0 * alpha) * z
            if not np.all(np.isfinite(x)):
                raise SamplerError(f"non-finite state at level {i}, inner step {m + 1}")
        if snapshots:
            snaps.append(x.copy())
    return (x, snaps) if snapshots else x


def cas_noise_scale(gamma: float, eps: float, sigma_min: float) -> float:
    """``β = √(1 - γ²(1 - ε/σ_min²)²)``; rejects configurations with ``β² < 0``."""
    b2 = 1.0 - gamma**2 * (1.0 - eps / sigma_min**2) ** 2
    if b2 < 0:
        raise ValueError(f"consistent annealed sampling needs beta^2 >= 0, got {b2:.3g}")
    return math.sqrt(b2)


def consistent_annealed(proc: VEProcess, score_fn: Callable, eps: float, rng, *, shape=None, x_init=None, denoise=False):
    """Consistent annealed sampling, one update per level from ``L`` to ``1``.

    ``x_{i-1} ← x_i + α_i s(x_i, i) + β σ_{i-1} √Σ z``.  The chain ends
    at the ``σ_min`` level; ``denoise=True`` adds a final expected-denoised
    step to remove the remaining ``σ_min`` noise.
    """
    sched = proc.schedule
    beta = cas_noise_scale(sched.gamma, eps, sched.sigma_min)
    if x_init is None:
        if shape is None:
            raise ValueError("need shape or x_init")
        x = sched.sigma_max * proc.cov.apply_sqrt_sigma(rng.standard_normal(shape))
    else:
        x = np.asarray(x_init, dtype=float).copy()
    for i in range(sched.L, 1, -1):
        alpha = eps * sched.sigma(i) ** 2 / sched.sigma_min**2
        z = proc.cov.apply_sqrt_sigma(rng.standard_normal(x.shape))
        x = x + alpha * score_fn(x, i) + beta * sched.sigma(i - 1) * z
        if not np.all(np.isfinite(x)):
            raise SamplerError(f"non-finite state at level {i}")
    if denoise:
        x = kernels.expected_denoised_sample(proc, x, 1, score=score_fn(x, 1))
    return x


# --------------------------------------------------------------------------
# blockwise autoregressive video driver
# --------------------------------------------------------------------------


def blockwise_autoregressive(
    eps_fn: Callable,
    proc: VPProcess,
    spec: SamplerSpec,
    past,
    n_blocks: int,
    k: int,
    *,
    p: int | None = None,
    f: int = 0,
    mask_past: bool = False,
    rng=None,
    clip_x0=None,
):
    """Generate ``n_blocks`` blocks of ``k`` frames, each conditioned on the last ``p``.

    ``eps_fn(x_t, t, cond)`` receives the flattened noisy block and the
    flattened conditioning ``[m_p · past, m_f · future]``; future frames
    are unknown here so ``m_f = 0``.  ``mask_past=True`` zeroes the past
    too, giving unconditional blocks.

    ``past`` has shape ``(batch, p, frame...)``; returns
    ``(batch, n_blocks * k, frame...)``.
    """
    past = np.asarray(past, dtype=float)
    if past.ndim < 2:
        raise ValueError("past must have shape (batch, p, frame...)")
    p = past.shape[1] if p is None else p
    if p > past.shape[1]:
        raise ValueError(f"p={p} exceeds the {past.shape[1]} available history frames")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    batch, frame_shape = past.shape[0], past.shape[2:]
    fd = int(np.prod(frame_shape)) if frame_shape else 1
    history = past
    blocks = []
    m_p = 0.0 if mask_past else 1.0
    future = np.zeros((batch, f * fd))
    for _ in range(n_blocks):
        cond = np.concatenate([m_p * history[:, -p:].reshape(batch, p * fd), future], axis=1)
        x = sample_vp(proc, lambda xt, t: eps_fn(xt, t, cond), spec, (batch, k * fd), rng=rng, clip_x0=clip_x0)
        block = x.reshape((batch, k) + frame_shape)
        blocks.append(block)
        history = np.concatenate([history, block], axis=1)
    return np.concatenate(blocks, axis=1)
