"""Multi-resolution image representation and likelihood bookkeeping.

Each 2x2 patch ``(x1, x2, x3, x4)`` (row-major inside the block) maps to
three detail coefficients ``y`` and the patch mean ``x̄``.  Two
transforms are provided:

``haar``
    the discrete Haar matrix; its analysis step has ``|det| = 1/2``.
``unimodular``
    the Haar detail rows rescaled by ``c = 2^{2/3}`` so the analysis step
    has determinant 1; the mean row is unchanged, so coarse images are
    exact block averages and keep the range of the input.

Images are ``(H, W)`` or ``(C, H, W)`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

C_UNIMODULAR = 2.0 ** (2.0 / 3.0)
A_UNIMODULAR = 4.0
KINDS = ("haar", "unimodular")

_SIGNS = np.array(
    [
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ]
)


def _detail_scale(kind: str) -> float:
    if kind == "haar":
        return 2.0
    if kind == "unimodular":
        return C_UNIMODULAR
    raise ValueError(f"unknown transform kind {kind!r}; expected one of {KINDS}")


def analysis_matrix(kind: str) -> np.ndarray:
    """4x4 matrix taking ``(x1..x4)`` to ``(y1, y2, y3, x̄)``."""
    s = _detail_scale(kind)
    return np.vstack([_SIGNS / s, np.full((1, 4), 1.0 / A_UNIMODULAR)])


def synthesis_matrix(kind: str) -> np.ndarray:
    """4x4 matrix taking ``(y1, y2, y3, x̄)`` back to ``(x1..x4)``."""
    s = _detail_scale(kind)
    return np.hstack([_SIGNS.T * (s / A_UNIMODULAR), np.ones((4, 1))])


def patch_analysis(kind: str, x):
    """Split the last axis (length 4) into ``(y, x̄)``."""
    x = np.asarray(x, dtype=float)
    out = x @ analysis_matrix(kind).T
    return out[..., :3], out[..., 3]


def patch_synthesis(kind: str, y, xbar):
    y = np.asarray(y, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    v = np.concatenate([y, xbar[..., None]], axis=-1)
    return v @ synthesis_matrix(kind).T


def _to_patches(x: np.ndarray) -> np.ndarray:
    # (..., H, W) -> (..., H/2, W/2, 4), patch order row-major
    *lead, h, w = x.shape
    p = x.reshape(*lead, h // 2, 2, w // 2, 2)
    p = np.moveaxis(p, -3, -2)
    return p.reshape(*lead, h // 2, w // 2, 4)


def _from_patches(p: np.ndarray) -> np.ndarray:
    *lead, h2, w2, _ = p.shape
    x = p.reshape(*lead, h2, w2, 2, 2)
    x = np.moveaxis(x, -2, -3)
    return x.reshape(*lead, 2 * h2, 2 * w2)


def logdet_term(kind: str, coarse_dims: int) -> float:
    """``log|det|`` of one analysis level given ``dims(x_{s+1})``."""
    if coarse_dims < 1:
        raise ValueError("coarse_dims must be >= 1")
    _detail_scale(kind)
    return 0.0 if kind == "unimodular" else coarse_dims * math.log(0.5)


@dataclass
class Pyramid:
    """``(y_1, ..., y_{S-1}, x_S)`` plus the accumulated analysis log-det.

    ``details[s]`` has shape ``(..., 3, H_s, W_s)`` where ``(H_s, W_s)`` is
    the size of the next coarser image.
    """

    details: list = field(default_factory=list)
    coarsest: np.ndarray | None = None
    logdet_total: float = 0.0
    logdets: list = field(default_factory=list)
    kind: str = "unimodular"

    @property
    def levels(self) -> int:
        return len(self.details) + 1


def decompose(image, S: int, kind: str = "unimodular") -> Pyramid:
    x = np.asarray(image, dtype=float)
    if S < 1:
        raise ValueError("S must be >= 1")
    _detail_scale(kind)
    f = 2 ** (S - 1)
    if x.shape[-1] % f or x.shape[-2] % f:
        raise ValueError(f"image sides {x.shape[-2:]} not divisible by 2^(S-1) = {f}")
    pyr = Pyramid(kind=kind)
    for _ in range(S - 1):
        y, xbar = patch_analysis(kind, _to_patches(x))
        pyr.details.append(np.moveaxis(y, -1, -3))
        ld = logdet_term(kind, xbar.size)
        pyr.logdets.append(ld)
        pyr.logdet_total += ld
        x = xbar
    pyr.coarsest = x
    return pyr


def reconstruct(pyr: Pyramid, kind: str | None = None) -> np.ndarray:
    kind = pyr.kind if kind is None else kind
    x = pyr.coarsest
    for y in reversed(pyr.details):
        x = _from_patches(patch_synthesis(kind, np.moveaxis(y, -3, -1), x))
    return x


def block_mean(x) -> np.ndarray:
    """2x2 block averages over the last two axes."""
    return _to_patches(np.asarray(x, dtype=float)).mean(axis=-1)


def loglikelihood_recursion(per_level_logps, logdet_terms) -> float:
    """``Σ_s (Δlog p_s + log p(y_s | x_{s+1})) + log p(x_S)``.

    ``per_level_logps`` lists the ``S-1`` conditional terms followed by the
    coarsest term; ``logdet_terms`` has the ``S-1`` transform terms.
    """
    lp = list(per_level_logps)
    ld = list(logdet_terms)
    if len(lp) != len(ld) + 1:
        raise ValueError(f"expected {len(ld) + 1} log-prob terms for {len(ld)} log-det terms, got {len(lp)}")
    return float(sum(ld) + sum(lp))


def bpd(logp: float, dims: int) -> float:
    """Bits per dimension ``-log p / (dims ln 2)`` from a natural-log density."""
    if dims < 1:
        raise ValueError("dims must be >= 1")
    return -logp / (dims * math.log(2.0))


def bpd_8bit(logp_unit_interval: float, dims: int) -> float:
    """BPD of 8-bit data given the log-density of its ``[0, 1]`` rescaling.

    Dividing each of ``dims`` values by 256 contributes ``dims·log 256``
    nats, i.e. exactly 8 bits per dimension.
    """
    return bpd(logp_unit_interval, dims) + 8.0


def multires_noise_split(S: int, fine_variance: float = 1.0, kind: str = "unimodular") -> dict:
    """Per-level variances of i.i.d. fine noise after analysis.

    Each level quarters the variance of the coarse image; detail
    coefficients carry ``(4/s²)·v`` where ``s`` is the detail scale, i.e.
    ``c·v`` for the unimodular transform.  Synthesising independent noise
    with these variances gives back i.i.d. noise of ``fine_variance``.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    s = _detail_scale(kind)
    v = float(fine_variance)
    details = []
    for _ in range(S - 1):
        details.append(4.0 / s**2 * v)
        v /= 4.0
    return {"details": details, "coarse": v}


def sample_noise_pyramid(shape, S: int, rng, kind: str = "unimodular", fine_variance: float = 1.0) -> Pyramid:
    """Draw independent per-level noise with :func:`multires_noise_split` variances."""
    split = multires_noise_split(S, fine_variance, kind)
    *lead, h, w = shape
    pyr = Pyramid(kind=kind)
    for var in split["details"]:
        h, w = h // 2, w // 2
        pyr.details.append(math.sqrt(var) * rng.standard_normal((*lead, 3, h, w)))
    pyr.coarsest = math.sqrt(split["coarse"]) * rng.standard_normal((*lead, h, w))
    return pyr
