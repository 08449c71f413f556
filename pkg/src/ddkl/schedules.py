"""Noise schedules and the rules used to tune them.

Discrete VP schedules are indexed ``t = 1..L`` with ``alpha_bar(0) = 1``.
Geometric VE ladders are indexed ``i = 1..L`` with index 1 the smallest
noise level; samplers walk them from ``L`` down to ``1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist
from scipy.optimize import minimize_scalar

from .covariance import IDENTITY

#: Operating point reported for 32x32x3 images; the exact overlap-0.5
#: root at D=3072 is ~1.0398 (see :func:`tune_gamma`).
REFERENCE_GAMMA = 1.0376


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DiscreteVPSchedule:
    """Variance-preserving ladder ``β_1..β_L`` with running products ``ᾱ``."""

    betas: np.ndarray
    alpha_bars: np.ndarray = field(repr=False)

    @classmethod
    def from_betas(cls, betas) -> "DiscreteVPSchedule":
        b = np.asarray(betas, dtype=float)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("betas must be a non-empty vector")
        if np.any(b <= 0) or np.any(b >= 1):
            raise ValueError("betas must lie in (0, 1)")
        return cls(_frozen(b), _frozen(np.cumprod(1.0 - b)))

    @property
    def L(self) -> int:
        return int(self.betas.size)

    def _check(self, t: int, lo: int = 0) -> int:
        t = int(t)
        if not lo <= t <= self.L:
            raise IndexError(f"time index {t} outside [{lo}, {self.L}]")
        return t

    def alpha_bar(self, t: int) -> float:
        t = self._check(t)
        return 1.0 if t == 0 else float(self.alpha_bars[t - 1])

    def beta(self, t: int) -> float:
        return float(self.betas[self._check(t, 1) - 1])

    def beta_tilde(self, t: int) -> float:
        """Posterior variance ``(1-ᾱ_{t-1})/(1-ᾱ_t) β_t``; zero at ``t = 1``."""
        t = self._check(t, 1)
        return (1.0 - self.alpha_bar(t - 1)) / (1.0 - self.alpha_bar(t)) * self.beta(t)

    def subsequence(self, n: int) -> np.ndarray:
        """Evenly strided visiting order ``L, L-s, ..., s`` closed with ``1``.

        ``subsequence(100)`` of a 1000-step schedule is
        ``[1000, 990, ..., 10, 1]``.
        """
        return even_subsequence(self.L, n)


def even_subsequence(L: int, n: int) -> np.ndarray:
    if not 1 <= n <= L:
        raise ValueError(f"step count {n} outside [1, {L}]")
    stride = L // n
    steps = list(range(L, 0, -stride))
    if steps[-1] != 1:
        steps.append(1)
    return np.array(steps, dtype=int)


def make_linear_beta(L: int, beta_1: float, beta_L: float) -> DiscreteVPSchedule:
    """Linearly spaced betas between the two endpoints."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if not 0 < beta_1 < 1 or not 0 < beta_L < 1:
        raise ValueError("beta endpoints must lie in (0, 1)")
    if L == 1:
        if beta_1 != beta_L:
            raise ValueError("a single-step schedule needs beta_1 == beta_L")
    elif not beta_1 < beta_L:
        raise ValueError("beta endpoints must be increasing")
    return DiscreteVPSchedule.from_betas(np.linspace(beta_1, beta_L, L))


@dataclass(frozen=True)
class ContinuousVPSchedule:
    beta_min: float
    beta_max: float

    def __post_init__(self):
        if not 0 < self.beta_min < self.beta_max:
            raise ValueError("need 0 < beta_min < beta_max")

    def beta(self, t):
        return self.beta_min + np.asarray(t, dtype=float) * (self.beta_max - self.beta_min)

    def integral(self, t):
        return beta_integral(self, t)


def beta_integral(s: ContinuousVPSchedule, t):
    """Exact ``∫_0^t β(u) du`` for the linear schedule; rejects ``t ∉ [0, 1]``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("t must lie in [0, 1]")
    out = t * s.beta_min + 0.5 * t**2 * (s.beta_max - s.beta_min)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GeometricVESchedule:
    """Geometric ladder ``σ_1 < ... < σ_L`` with constant ratio ``gamma``."""

    sigmas: np.ndarray
    gamma: float

    @property
    def L(self) -> int:
        return int(self.sigmas.size)

    @property
    def sigma_min(self) -> float:
        return float(self.sigmas[0])

    @property
    def sigma_max(self) -> float:
        return float(self.sigmas[-1])

    def sigma(self, i: int) -> float:
        """``σ_i`` for ``i = 1..L``; ``σ_0 := 0`` marks clean data."""
        i = int(i)
        if not 0 <= i <= self.L:
            raise IndexError(f"level {i} outside [0, {self.L}]")
        return 0.0 if i == 0 else float(self.sigmas[i - 1])


def make_geometric_sigma(sigma_min: float, sigma_max: float, L: int) -> GeometricVESchedule:
    if not 0 < sigma_min < sigma_max:
        raise ValueError("need 0 < sigma_min < sigma_max")
    if L < 2:
        raise ValueError("a geometric ladder needs L >= 2")
    gamma = (sigma_max / sigma_min) ** (1.0 / (L - 1))
    sigmas = sigma_min * gamma ** np.arange(L)
    sigmas[-1] = sigma_max
    return GeometricVESchedule(_frozen(sigmas), float(gamma))


@dataclass(frozen=True)
class LangevinConfig:
    eps: float
    T: int

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    def step_size(self, sigma_i: float, sigma_min: float) -> float:
        """``α_i = ε σ_i² / σ_min²``."""
        return self.eps * sigma_i**2 / sigma_min**2


# --------------------------------------------------------------------------
# tuning rules
# --------------------------------------------------------------------------


def tune_sigma1(data, cov=IDENTITY, *, max_exact: int = 2000, n_pairs: int = 1_000_000, rng=None) -> float:
    """Largest whitened pairwise distance ``max ‖√Σ⁻¹(x_i - x_j)‖``.

    ``data`` holds one sample per leading index; each sample must have the
    shape ``cov`` acts on.  Above ``max_exact`` samples a random subset of
    ``n_pairs`` pairs is scanned instead of all of them.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim < 2 or x.shape[0] < 2:
        raise ValueError("need at least 2 samples")
    w = cov.apply_inv_sqrt_sigma(x).reshape(x.shape[0], -1)
    n = w.shape[0]
    if n <= max_exact:
        return float(pdist(w).max())
    rng = np.random.default_rng(0) if rng is None else rng
    best = 0.0
    for start in range(0, n_pairs, 100_000):
        m = min(100_000, n_pairs - start)
        i = rng.integers(0, n, m)
        j = rng.integers(0, n, m)
        best = max(best, float(np.sqrt(((w[i] - w[j]) ** 2).sum(axis=1)).max()))
    return best


def _phi(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def radial_overlap(gamma: float, D: int) -> float:
    """Mass of the radial band of one noise level falling inside its neighbour's."""
    a = math.sqrt(2.0 * D) * (gamma - 1.0)
    return _phi(a + 3.0 * gamma) - _phi(a - 3.0 * gamma)


def tune_gamma(D: int, target: float = 0.5, *, lo: float = 1.0 + 1e-6, hi: float = 2.0, tol: float = 1e-12) -> float:
    """Bisect for the ratio ``γ`` whose neighbouring-level overlap equals ``target``."""
    if D < 1:
        raise ValueError("D must be >= 1")
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    f_lo = radial_overlap(lo, D) - target
    f_hi = radial_overlap(hi, D) - target
    if f_lo * f_hi > 0:
        raise ValueError(f"no sign change for target {target} in gamma bracket ({lo}, {hi})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = radial_overlap(mid, D) - target
        if f_mid == 0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tune_num_scales(sigma1: float, sigmaL: float, gamma: float) -> int:
    """Number of geometric levels spanning ``[sigmaL, sigma1]`` at ratio ``gamma``."""
    if not sigma1 >= sigmaL > 0:
        raise ValueError("need sigma1 >= sigmaL > 0")
    if not gamma > 1:
        raise ValueError("gamma must be > 1")
    return int(round(1.0 + math.log(sigma1 / sigmaL) / math.log(gamma)))


def langevin_terminal_variance(gamma: float, eps: float, sigma_min: float, T: int, cov=IDENTITY):
    """``Var[x_T]/σ_i²`` after ``T`` Langevin steps at one level.

    The chain starts at the previous level's marginal ``N(0, σ_{i-1}² Σ)``
    and uses the fixed-level Gaussian score.  Evaluated per eigenmode
    ``λ`` of ``Σ`` with ``p = 1 - ε/(σ_min² λ)``:

        γ² p^{2T} λ + (2ε/σ_min²) Σ_{t<T} p^{2t} λ

    Returns a float for the identity covariance and one value per
    eigenmode otherwise.
    """
    if not gamma > 1:
        raise ValueError("gamma must be > 1")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if T < 1:
        raise ValueError("T must be >= 1")
    lam = np.asarray(cov.eigenvalues(), dtype=float)
    a = eps / sigma_min**2
    if a / lam.min() >= 1:
        raise ValueError(f"divergent Langevin step: eps/sigma_min^2 = {a:.3g} >= {lam.min():.3g}")
    p2 = (1.0 - a / lam) ** 2
    # Σ_{t<T} p^{2t} via expm1 so that tiny steps do not cancel to 0/0
    lp = 2.0 * np.log1p(-a / lam)
    with np.errstate(invalid="ignore", divide="ignore"):
        geom = np.where(lp == 0.0, float(T), np.expm1(T * lp) / np.where(lp == 0.0, 1.0, np.expm1(lp)))
    ratio = gamma**2 * p2**T * lam + 2.0 * a * geom * lam
    if getattr(cov, "is_identity", False):
        return float(ratio[0])
    return ratio


@dataclass(frozen=True)
class LangevinTuning:
    eps: float
    mean_ratio: float
    min_ratio: float
    max_ratio: float


def tune_langevin_eps_report(gamma: float, sigma_min: float, T: int, cov=IDENTITY, *, target: float = 1.0) -> LangevinTuning:
    """Pick ``ε`` bringing the eigenmode-mean terminal ratio closest to ``target``.

    The ratio starts at ``γ² mean(λ)`` for ``ε → 0``.  When it crosses the
    target the first crossing is bisected; otherwise (the usual case --
    the ratio bottoms out slightly above 1) the minimiser of
    ``|ratio - target|`` is returned.  The per-mode spread is reported
    alongside.
    """
    lam_min = float(np.min(cov.eigenvalues()))
    eps_max = 0.999 * sigma_min**2 * lam_min

    def mean_ratio(e):
        return float(np.mean(langevin_terminal_variance(gamma, e, sigma_min, T, cov)))

    grid = np.geomspace(eps_max * 1e-7, eps_max, 801)
    vals = np.array([mean_ratio(e) for e in grid]) - target
    cross = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if cross.size:
        lo, hi = grid[cross[0]], grid[cross[0] + 1]
        f_lo = vals[cross[0]]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f_mid = mean_ratio(mid) - target
            if (f_mid > 0) == (f_lo > 0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * hi:
                break
        eps = 0.5 * (lo + hi)
    else:
        k = int(np.argmin(np.abs(vals)))
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        res = minimize_scalar(
            lambda le: abs(mean_ratio(math.exp(le)) - target),
            bounds=(math.log(a), math.log(b)),
            method="bounded",
            options={"xatol": 1e-10},
        )
        eps = math.exp(res.x)
    r = np.atleast_1d(langevin_terminal_variance(gamma, eps, sigma_min, T, cov))
    return LangevinTuning(eps, float(r.mean()), float(r.min()), float(r.max()))


def tune_langevin_eps(gamma: float, sigma_min: float, T: int, cov=IDENTITY) -> float:
    return tune_langevin_eps_report(gamma, sigma_min, T, cov).eps
