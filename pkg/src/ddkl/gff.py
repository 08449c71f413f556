"""Gaussian free field covariance built in the Fourier domain.

For an ``n x n`` field with ``N = n²`` pixels, ``W`` the DFT and ``K`` the
diagonal of frequency magnitudes raised to ``gamma_exp``::

    √Σ  = Real(W⁻¹ K⁻¹ W) / (√(2N) σ_N)
    Σ   = Real(W⁻¹ K⁻² W) / (2N σ_N²)

``σ_N`` is fixed so that every pixel has unit variance.  Because
``|k(f)| = |k(-f)|`` the operators map real fields to real fields and are
symmetric circulant convolutions; the ``Real`` merely drops round-off.
Leading axes (channels, batch) are treated independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_DENSE_SIDE = 16


def frequency_magnitudes(n: int) -> np.ndarray:
    """``|k_ij| = √(f_i² + f_j²)`` in FFT layout, with the DC entry set to 1."""
    f = np.fft.fftfreq(n) * n
    k = np.sqrt(f[:, None] ** 2 + f[None, :] ** 2)
    k[0, 0] = 1.0
    return k


@dataclass(frozen=True)
class SpectralCovariance:
    n: int
    gamma_exp: float
    channels: int = 1
    k_grid: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    sigma_N: float = field(init=False)

    is_identity = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.gamma_exp < 0:
            raise ValueError("gamma_exp must be >= 0")
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        k = frequency_magnitudes(self.n)
        w = k ** (-float(self.gamma_exp))
        N = self.n * self.n
        sigma_N = math.sqrt(float(np.sum(w**2)) / (2.0 * N * N))
        for a in (k, w):
            a.setflags(write=False)
        object.__setattr__(self, "k_grid", k)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sigma_N", sigma_N)

    @property
    def N(self) -> int:
        return self.n * self.n

    @property
    def scale(self) -> float:
        """``1/(√(2N) σ_N)``, the overall factor of ``√Σ``."""
        return 1.0 / (math.sqrt(2.0 * self.N) * self.sigma_N)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n, self.n) if self.channels == 1 else (self.channels, self.n, self.n)

    def _filter(self, v, spectrum):
        v = np.asarray(v, dtype=float)
        if v.shape[-2:] != (self.n, self.n):
            raise ValueError(f"expected trailing shape {(self.n, self.n)}, got {v.shape[-2:]}")
        # copy out of the complex buffer so downstream BLAS sees contiguous data
        return np.ascontiguousarray(np.fft.ifft2(np.fft.fft2(v) * spectrum).real)

    def apply_sqrt_sigma(self, v):
        return self._filter(v, self.scale * self.weights)

    def apply_sigma(self, v):
        return self._filter(v, self.scale**2 * self.weights**2)

    def apply_inv_sigma(self, v):
        return self._filter(v, 1.0 / (self.scale**2 * self.weights**2))

    def apply_inv_sqrt_sigma(self, v):
        return self._filter(v, 1.0 / (self.scale * self.weights))

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of ``Σ`` (one copy per channel)."""
        lam = (self.scale * self.weights).ravel() ** 2
        return np.tile(lam, self.channels)

    def logdet_sqrt(self) -> float:
        return flow_logdet_term(self)

    def sample(self, rng, size=()) -> np.ndarray:
        return sample(self, rng, size)


def build(n: int, gamma_exp: float = 1.0, channels: int = 1) -> SpectralCovariance:
    return SpectralCovariance(n, gamma_exp, channels)


def sample(cov: SpectralCovariance, rng, size=()) -> np.ndarray:
    """Draw GFF fields ``g = √Σ z`` with real ``z ~ N(0, I)``."""
    size = (size,) if isinstance(size, int) else tuple(size)
    z = rng.standard_normal(size + cov.shape)
    return cov.apply_sqrt_sigma(z)


def _dense(cov: SpectralCovariance, action) -> np.ndarray:
    if cov.n > MAX_DENSE_SIDE:
        raise ValueError(f"dense realisation limited to n <= {MAX_DENSE_SIDE}, got {cov.n}")
    N = cov.N
    basis = np.eye(N).reshape(N, cov.n, cov.n)
    # column j is the action on basis vector j
    return action(basis).reshape(N, N).T


def dense_sigma(cov: SpectralCovariance) -> np.ndarray:
    """Single-channel ``N x N`` matrix of ``Σ`` built column by column."""
    return _dense(cov, cov.apply_sigma)


def dense_sqrt_sigma(cov: SpectralCovariance) -> np.ndarray:
    return _dense(cov, cov.apply_sqrt_sigma)


def flow_logdet_term(cov: SpectralCovariance) -> float:
    """``log|det √Σ|`` from the spectral weights, summed over channels.

    Enters flows as ``log p(g) = log p(z) - log|det √Σ|``.
    """
    per_channel = cov.N * math.log(cov.scale) + float(np.sum(np.log(cov.weights)))
    return cov.channels * per_channel


def pixel_variance(cov: SpectralCovariance, rng, draws: int, chunk: int = 10_000) -> np.ndarray:
    """Per-pixel sample variance of ``draws`` fields, accumulated in chunks."""
    s1 = np.zeros(cov.shape)
    s2 = np.zeros(cov.shape)
    done = 0
    while done < draws:
        m = min(chunk, draws - done)
        g = sample(cov, rng, m)
        s1 += g.sum(axis=0)
        s2 += (g * g).sum(axis=0)
        done += m
    mean = s1 / draws
    return s2 / draws - mean**2


def lag1_autocorrelation(fields: np.ndarray) -> float:
    """Mean horizontal neighbour correlation of a stack of periodic fields."""
    f = np.asarray(fields, dtype=float)
    f = f - f.mean()
    return float(np.mean(f * np.roll(f, 1, axis=-1)) / np.mean(f * f))
