"""Fixed-step ODE integration, adjoint gradients and CNF log-densities.

Differential functions have the signature ``f(x, t, params)``.  Step
counts are ``round(|t1 - t0| / h)`` and the step is rescaled to land on
``t1`` exactly; ``t1 < t0`` integrates backwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Func = Callable[[np.ndarray, float, object], np.ndarray]


class ODESolveError(FloatingPointError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state at step {step} (t={t:g})")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class IVP:
    f: Func
    x0: np.ndarray
    t0: float
    t1: float
    params: object = None


@dataclass(frozen=True)
class SolverConfig:
    method: str = "rk4"
    h: float = 1e-2

    def __post_init__(self):
        if self.method not in ("euler", "rk4"):
            raise ValueError(f"unknown method {self.method!r}; expected 'euler' or 'rk4'")
        if not self.h > 0:
            raise ValueError("step size h must be > 0")


@dataclass
class AdjointState:
    a: np.ndarray
    grad_params: np.ndarray


def _euler(f, x, t, h, p):
    return x + h * f(x, t, p)


def _rk4(f, x, t, h, p):
    s1 = f(x, t, p)
    s2 = f(x + 0.5 * h * s1, t + 0.5 * h, p)
    s3 = f(x + 0.5 * h * s2, t + 0.5 * h, p)
    s4 = f(x + h * s3, t + h, p)
    return x + (h / 6.0) * (s1 + 2.0 * s2 + 2.0 * s3 + s4)


_STEPPERS = {"euler": _euler, "rk4": _rk4}


def num_steps(t0: float, t1: float, h: float) -> int:
    return max(int(round(abs(t1 - t0) / h)), 1) if t1 != t0 else 0


def solve(ivp: IVP, cfg: SolverConfig, *, trajectory: bool = False):
    """Integrate ``ivp`` from ``t0`` to ``t1``.

    Returns the final state, or ``(times, states)`` when ``trajectory``.
    """
    step = _STEPPERS[cfg.method]
    n = num_steps(ivp.t0, ivp.t1, cfg.h)
    x = np.asarray(ivp.x0, dtype=float)
    h = (ivp.t1 - ivp.t0) / n if n else 0.0
    times = [ivp.t0]
    states = [x]
    for k in range(n):
        t = ivp.t0 + k * h
        x = step(ivp.f, x, t, h, ivp.params)
        if not np.all(np.isfinite(x)):
            raise ODESolveError(k + 1, t + h)
        if trajectory:
            times.append(ivp.t0 + (k + 1) * h)
            states.append(x)
    if trajectory:
        return np.array(times), np.array(states)
    return x


def jacobian_fd(fun: Callable[[np.ndarray], np.ndarray], x, rel_step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian with per-coordinate step ``rel_step (1 + |x_j|)``."""
    x = np.asarray(x, dtype=float).ravel()
    cols = []
    for j in range(x.size):
        d = rel_step * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += d
        xm[j] -= d
        cols.append((np.ravel(fun(xp)) - np.ravel(fun(xm))) / (2.0 * d))
    return np.stack(cols, axis=1) if cols else np.zeros((0, 0))


def adjoint_gradient(ivp: IVP, dL_dx1, cfg: SolverConfig, *, jac_x=None, jac_params=None):
    """Gradients of a loss on ``x(t1)`` via the augmented adjoint system.

    Solves ``(x, a, g)`` backwards from ``t1`` to ``t0`` with
    ``da/dt = -aᵀ ∂f/∂x`` and ``dg/dt = -aᵀ ∂f/∂θ``.  ``jac_x(x, t, θ)``
    and ``jac_params(x, t, θ)`` default to central finite differences.

    Returns ``(dL/dθ, dL/dx0)``.
    """
    x0 = np.atleast_1d(np.asarray(ivp.x0, dtype=float))
    theta = np.atleast_1d(np.asarray(ivp.params if ivp.params is not None else [], dtype=float))
    a1 = np.atleast_1d(np.asarray(dL_dx1, dtype=float))
    if a1.shape != x0.shape:
        raise ValueError(f"loss gradient shape {a1.shape} does not match state shape {x0.shape}")
    nx, npar = x0.size, theta.size
    f = ivp.f

    if jac_x is None:
        def jac_x(x, t, p):
            return jacobian_fd(lambda v: f(v, t, p), x)
    if jac_params is None:
        def jac_params(x, t, p):
            return jacobian_fd(lambda q: f(x, t, q), p) if npar else np.zeros((nx, 0))

    def aug(state, t, p):
        x = state[:nx]
        a = state[nx:2 * nx]
        dx = np.ravel(f(x, t, p))
        da = -a @ np.atleast_2d(jac_x(x, t, p))
        dg = -a @ np.atleast_2d(jac_params(x, t, p)) if npar else np.zeros(0)
        return np.concatenate([dx, da, dg])

    x1 = np.ravel(solve(IVP(f, x0, ivp.t0, ivp.t1, theta), cfg))
    s1 = np.concatenate([x1, a1.ravel(), np.zeros(npar)])
    s0 = solve(IVP(aug, s1, ivp.t1, ivp.t0, theta), cfg)
    return s0[2 * nx:], s0[nx:2 * nx]


def standard_normal_logpdf(z) -> float:
    z = np.ravel(z)
    return float(-0.5 * z @ z - 0.5 * z.size * math.log(2.0 * math.pi))


def cnf_logdensity(f: Func, x, cfg: SolverConfig, params=None, *, t0: float = 0.0, t1: float = 1.0, jac=None, max_dim: int = 64):
    """Push ``x`` through the flow and accumulate ``Δlog p = -∫ Tr(∂f/∂v) dt``.

    Returns ``(z, delta_logp)``.  The exact trace uses ``jac(v, t, θ)`` or
    central finite differences.
    """
    x = np.ravel(np.asarray(x, dtype=float))
    d = x.size
    if d > max_dim:
        raise ValueError(f"exact trace limited to {max_dim} dimensions, got {d}")
    if jac is None:
        def jac(v, t, p):
            return jacobian_fd(lambda u: f(u, t, p), v)

    def aug(state, t, p):
        v = state[:d]
        tr = float(np.trace(np.atleast_2d(jac(v, t, p))))
        if not math.isfinite(tr):
            raise FloatingPointError(f"non-finite Jacobian trace at t={t:g}")
        return np.concatenate([np.ravel(f(v, t, p)), [-tr]])

    out = solve(IVP(aug, np.concatenate([x, [0.0]]), t0, t1, params), cfg)
    return out[:d], float(out[d])


def cnf_log_prob(f: Func, x, cfg: SolverConfig, params=None, **kw) -> float:
    """``log p(x)`` under a standard-normal base through the flow.

    Since ``log p(z) - log p(x) = Δlog p``, this is ``log N(z) - Δlog p``.
    """
    z, dlogp = cnf_logdensity(f, x, cfg, params, **kw)
    return standard_normal_logpdf(z) - dlogp
