"""Toy ε-predictors, losses and a deterministic Adam training loop.

The network is a small MLP with SiLU activations and hand-written
backprop.  Its input is the concatenation ``[x, e(t/L), cond]`` where
``e`` is the sinusoidal time embedding.  Every loss returns
``(loss, grad)`` with ``grad`` shaped like the flat parameter vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .covariance import IDENTITY

EMBED_BASE = 10000.0


def time_embedding(t, D: int, c: float = EMBED_BASE) -> np.ndarray:
    """Interleaved ``(cos(t ω_d), sin(t ω_d))`` pairs with ``ω_d = c^{-2d/D}``.

    ``t`` may be a scalar or an array; the result has trailing length ``D``.
    """
    if D < 2 or D % 2:
        raise ValueError(f"embedding width must be a positive even number, got {D}")
    t = np.asarray(t, dtype=float)
    w = c ** (-2.0 * np.arange(D // 2) / D)
    ang = t[..., None] * w
    out = np.empty(t.shape + (D,))
    out[..., 0::2] = np.cos(ang)
    out[..., 1::2] = np.sin(ang)
    return out


def _silu(z):
    s = 1.0 / (1.0 + np.exp(-z))
    return z * s, s


class MLPDenoiser:
    """``ε_θ(x, t, cond)`` as an MLP on ``[x, e(t/L), cond]``.

    Parameters live in one flat float64 vector ``params``; layer weights
    are views into it.
    """

    def __init__(self, data_dim: int, L: int, *, cond_dim: int = 0, emb_dim: int = 16, hidden=(128, 128, 128), seed: int = 0):
        if data_dim < 1 or L < 1:
            raise ValueError("data_dim and L must be >= 1")
        if cond_dim < 0:
            raise ValueError("cond_dim must be >= 0")
        if emb_dim % 2:
            raise ValueError("emb_dim must be even")
        self.data_dim = int(data_dim)
        self.cond_dim = int(cond_dim)
        self.emb_dim = int(emb_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.L = int(L)
        self.widths = (self.in_dim,) + self.hidden + (self.data_dim,)
        self.params = np.zeros(self.num_params)
        rng = np.random.default_rng(seed)
        for W, b in self.layers():
            W[...] = rng.standard_normal(W.shape) / math.sqrt(W.shape[0])
            b[...] = 0.0

    @property
    def in_dim(self) -> int:
        return self.data_dim + self.emb_dim + self.cond_dim

    @property
    def num_params(self) -> int:
        w = self.widths
        return sum(w[i] * w[i + 1] + w[i + 1] for i in range(len(w) - 1))

    def architecture(self) -> dict:
        return {
            "data_dim": self.data_dim,
            "cond_dim": self.cond_dim,
            "emb_dim": self.emb_dim,
            "hidden": list(self.hidden),
            "L": self.L,
        }

    def layers(self, params=None):
        """``[(W, b), ...]`` views into ``params`` (default: ``self.params``)."""
        p = self.params if params is None else params
        if p.size != self.num_params:
            raise ValueError(f"expected {self.num_params} parameters, got {p.size}")
        out, o = [], 0
        w = self.widths
        for i in range(len(w) - 1):
            n_w = w[i] * w[i + 1]
            W = p[o:o + n_w].reshape(w[i], w[i + 1])
            o += n_w
            b = p[o:o + w[i + 1]]
            o += w[i + 1]
            out.append((W, b))
        return out

    def _inputs(self, x, t, cond):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        B = x.shape[0]
        if x.shape[1] != self.data_dim:
            raise ValueError(f"expected data dim {self.data_dim}, got {x.shape[1]}")
        t = np.broadcast_to(np.asarray(t, dtype=float), (B,))
        parts = [x, time_embedding(t / self.L, self.emb_dim)]
        if self.cond_dim:
            if cond is None:
                cond = np.zeros((B, self.cond_dim))
            cond = np.atleast_2d(np.asarray(cond, dtype=float))
            if cond.shape != (B, self.cond_dim):
                raise ValueError(f"expected conditioning shape {(B, self.cond_dim)}, got {cond.shape}")
            parts.append(cond)
        elif cond is not None and np.size(cond):
            raise ValueError("model has no conditioning input")
        return np.concatenate(parts, axis=1)

    def forward(self, x, t, cond=None, params=None):
        """Return ``(eps_hat, cache)`` for a batch ``x`` of shape ``(B, data_dim)``."""
        h = self._inputs(x, t, cond)
        layers = self.layers(params)
        cache = {"acts": [h], "sig": [], "pre": [], "layers": layers}
        for i, (W, b) in enumerate(layers):
            z = h @ W + b
            if i < len(layers) - 1:
                h, s = _silu(z)
                cache["pre"].append(z)
                cache["sig"].append(s)
            else:
                h = z
            cache["acts"].append(h)
        return h, cache

    def __call__(self, x, t, cond=None, params=None):
        return self.forward(x, t, cond, params)[0]

    def backward(self, cache, g_out):
        """Backprop ``dL/d eps_hat`` to ``(dL/dparams, dL/dx, dL/dcond)``."""
        layers = cache["layers"]
        acts = cache["acts"]
        grads = []
        g = np.asarray(g_out, dtype=float)
        for i in range(len(layers) - 1, -1, -1):
            W, _ = layers[i]
            grads.append((acts[i].T @ g, g.sum(axis=0)))
            g = g @ W.T
            if i > 0:
                z, s = cache["pre"][i - 1], cache["sig"][i - 1]
                g = g * (s * (1.0 + z * (1.0 - s)))
        flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in reversed(grads)])
        gx = g[:, :self.data_dim]
        gc = g[:, self.data_dim + self.emb_dim:]
        return flat, gx, gc

    def eps_fn(self, cond=None) -> Callable:
        """Adapter for :mod:`ddkl.samplers`: ``f(x, t)`` on arbitrary batch shapes."""
        def f(x, t):
            x = np.asarray(x, dtype=float)
            flat = x.reshape(-1, self.data_dim)
            return self(flat, t, cond).reshape(x.shape)
        return f

    def cond_eps_fn(self) -> Callable:
        """Adapter ``f(x, t, cond)`` for the blockwise autoregressive driver."""
        def f(x, t, cond):
            return self(np.asarray(x, dtype=float), t, cond)
        return f


# --------------------------------------------------------------------------
# losses
# --------------------------------------------------------------------------


def _alpha_bar_sqrt(proc, t):
    ab = proc.schedule.alpha_bars[np.asarray(t) - 1]
    return np.sqrt(ab), np.sqrt(1.0 - ab)


def _bcast(v, ndim):
    return v.reshape(v.shape + (1,) * (ndim - v.ndim))


def draw_noise(proc, batch_shape, rng):
    """``t ~ U{1..L}`` per sample and standard-normal ``ε`` of ``batch_shape``."""
    t = rng.integers(1, proc.L + 1, size=batch_shape[0])
    eps = rng.standard_normal(batch_shape)
    return t, eps


def noisy_batch(proc, x0, t, eps):
    """Batched forward marginal ``√ᾱ_t x0 + √(1-ᾱ_t) √Σ ε``."""
    a, s = _alpha_bar_sqrt(proc, t)
    return _bcast(a, x0.ndim) * x0 + _bcast(s, x0.ndim) * proc.cov.apply_sqrt_sigma(eps)


def _residual_weight(cov, variant: str):
    if variant == "a":
        return lambda r: r
    if variant == "b":
        return cov.apply_inv_sqrt_sigma
    if variant == "c":
        return cov.apply_sqrt_sigma
    raise ValueError(f"unknown NI loss variant {variant!r}; expected 'a', 'b' or 'c'")


def loss_ni(model: MLPDenoiser, proc, x0, variant: str = "a", rng=None, *, t=None, eps=None, cond=None):
    """Mean over the batch of ``‖W(ε - ε_θ)‖²`` with ``W`` = I, √Σ⁻¹ or √Σ.

    ``x0`` has shape ``(B, *event)`` where ``event`` is whatever the
    covariance operator acts on; the model sees the flattened event.
    Pass ``t`` and ``eps`` to pin the Monte-Carlo draw.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim < 2 or x0.shape[0] == 0:
        raise ValueError("x0 must be a non-empty batch of shape (B, ...)")
    if t is None or eps is None:
        if rng is None:
            raise ValueError("need rng or explicit (t, eps)")
        t_d, e_d = draw_noise(proc, x0.shape, rng)
        t = t_d if t is None else t
        eps = e_d if eps is None else eps
    t = np.asarray(t)
    eps = np.asarray(eps, dtype=float)
    B = x0.shape[0]
    xt = noisy_batch(proc, x0, t, eps)
    out, cache = model.forward(xt.reshape(B, -1), t, cond)
    r = eps - out.reshape(x0.shape)
    W = _residual_weight(proc.cov, variant)
    wr = W(r)
    loss = float(np.sum(wr * wr) / B)
    # d/dε_θ ‖W r‖² = -2 Wᵀ W r, with W symmetric
    g = -2.0 * W(wr) / B
    grad, _, gc = model.backward(cache, g.reshape(B, -1))
    return loss, grad


def loss_noise_matching(model: MLPDenoiser, proc, x0, rng=None, *, t=None, eps=None, cond=None):
    """``E‖ε - ε_θ(x_t, t)‖²`` with ``t ~ U{1..L}``."""
    return loss_ni(model, proc, x0, "a", rng, t=t, eps=eps, cond=cond)


def score_matching_objective(e, eps, alpha_bar) -> float:
    """Weighted score matching with ``s_θ = -e/√(1-ᾱ)`` and weight ``1-ᾱ``.

    Isotropic form; equals the noise-matching value ``mean‖ε - e‖²``.
    """
    e = np.asarray(e, dtype=float)
    eps = np.asarray(eps, dtype=float)
    ab = _bcast(np.asarray(alpha_bar, dtype=float), e.ndim)
    s = -e / np.sqrt(1.0 - ab)
    target = -eps / np.sqrt(1.0 - ab)
    return float(np.sum((1.0 - ab) * (s - target) ** 2) / e.shape[0])


# --------------------------------------------------------------------------
# masked conditional training for frame windows
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MaskConfig:
    p: int = 2
    k: int = 2
    f: int = 0
    p_mask: float = 0.5

    def __post_init__(self):
        if self.p < 1 or self.k < 1:
            raise ValueError("p and k must be >= 1")
        if self.f < 0:
            raise ValueError("f must be >= 0")
        if not 0.0 <= self.p_mask <= 1.0:
            raise ValueError("p_mask must lie in [0, 1]")

    @property
    def window(self) -> int:
        return self.p + self.k + self.f


def sample_masks(cfg: MaskConfig, rng, size=None):
    """Independent Bernoulli masks ``(m_p, m_f)``; 0 (frames zeroed) with prob ``p_mask``."""
    m_p = (rng.random(size) >= cfg.p_mask).astype(float)
    m_f = (rng.random(size) >= cfg.p_mask).astype(float)
    return m_p, m_f


def split_window(windows, cfg: MaskConfig):
    w = np.asarray(windows, dtype=float)
    if w.ndim < 2 or w.shape[1] != cfg.window:
        raise ValueError(f"windows must have shape (B, {cfg.window}, ...), got {w.shape}")
    return w[:, :cfg.p], w[:, cfg.p:cfg.p + cfg.k], w[:, cfg.p + cfg.k:]


def masked_condition(past, future, m_p, m_f):
    """Flattened ``[m_p·past, m_f·future]`` for a batch."""
    B = past.shape[0]
    m_p = _bcast(np.broadcast_to(np.asarray(m_p, dtype=float), (B,)).copy(), past.ndim)
    m_f = _bcast(np.broadcast_to(np.asarray(m_f, dtype=float), (B,)).copy(), future.ndim)
    return np.concatenate([(m_p * past).reshape(B, -1), (m_f * future).reshape(B, -1)], axis=1)


def loss_masked_conditional(model: MLPDenoiser, proc, windows, cfg: MaskConfig, rng=None, *, t=None, eps=None, masks=None, return_cond_grad=False):
    """Noise matching on the ``k`` current frames given masked past/future.

    ``windows`` has shape ``(B, p+k+f, frame...)``.  With ``f = 0`` and
    ``p_mask = 0`` this is plain conditional prediction.
    """
    past, cur, future = split_window(windows, cfg)
    B = cur.shape[0]
    if model.cond_dim != past[0].size + future[0].size:
        raise ValueError(f"model conditioning dim {model.cond_dim} does not match window (p+f)·frame = {past[0].size + future[0].size}")
    if masks is None:
        if rng is None:
            raise ValueError("need rng or explicit masks")
        masks = sample_masks(cfg, rng, B)
    m_p, m_f = masks
    cond = masked_condition(past, future, m_p, m_f)
    x0 = cur.reshape(B, -1)
    if t is None or eps is None:
        if rng is None:
            raise ValueError("need rng or explicit (t, eps)")
        t_d, e_d = draw_noise(proc, x0.shape, rng)
        t = t_d if t is None else t
        eps = e_d if eps is None else eps
    t = np.asarray(t)
    eps = np.asarray(eps, dtype=float).reshape(x0.shape)
    xt = noisy_batch(proc, x0, t, eps)
    out, cache = model.forward(xt, t, cond)
    r = eps - out
    loss = float(np.sum(r * r) / B)
    grad, _, gc = model.backward(cache, -2.0 * r / B)
    if not return_cond_grad:
        return loss, grad
    # chain rule through the masks: d/d past = m_p · d/d cond
    npast = past[0].size
    mp = _bcast(np.broadcast_to(np.asarray(m_p, dtype=float), (B,)).copy(), 2)
    mf = _bcast(np.broadcast_to(np.asarray(m_f, dtype=float), (B,)).copy(), 2)
    g_past = (mp * gc[:, :npast]).reshape(past.shape)
    g_future = (mf * gc[:, npast:]).reshape(future.shape)
    return loss, grad, g_past, g_future


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 128
    iterations: int = 1000
    seed: int = 0
    lr_final: float | None = None

    def __post_init__(self):
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam decays must lie in [0, 1)")
        if self.adam_eps <= 0:
            raise ValueError("adam_eps must be > 0")
        if self.batch_size < 1 or self.iterations < 0:
            raise ValueError("batch_size must be >= 1 and iterations >= 0")


class TrainingError(FloatingPointError):
    def __init__(self, iteration: int, loss: float):
        super().__init__(f"non-finite loss {loss} at iteration {iteration}")
        self.iteration = iteration


@dataclass
class TrainResult:
    params: np.ndarray
    losses: np.ndarray = field(repr=False)


def train(model: MLPDenoiser, loss_op: Callable, data_fn: Callable, cfg: TrainConfig) -> TrainResult:
    """Minimise ``loss_op(model, batch, rng) -> (loss, grad)`` with Adam.

    ``data_fn(rng, batch_size)`` draws a batch.  One generator seeded from
    ``cfg.seed`` feeds both, so a fixed seed gives an identical trace.
    With ``lr_final`` set, the step size decays linearly to that value.
    """
    rng = np.random.default_rng(cfg.seed)
    m = np.zeros_like(model.params)
    v = np.zeros_like(model.params)
    losses = np.empty(cfg.iterations)
    for it in range(cfg.iterations):
        batch = data_fn(rng, cfg.batch_size)
        loss, g = loss_op(model, batch, rng)
        if not math.isfinite(loss) or not np.all(np.isfinite(g)):
            raise TrainingError(it, loss)
        losses[it] = loss
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        mh = m / (1.0 - cfg.beta1 ** (it + 1))
        vh = v / (1.0 - cfg.beta2 ** (it + 1))
        lr = cfg.lr
        if cfg.lr_final is not None and cfg.iterations > 1:
            lr = cfg.lr + (cfg.lr_final - cfg.lr) * it / (cfg.iterations - 1)
        model.params -= lr * mh / (np.sqrt(vh) + cfg.adam_eps)
    return TrainResult(model.params.copy(), losses)
