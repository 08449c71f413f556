"""Covariance operators shared by every non-isotropic formula.

An operator exposes the four actions ``Σ v``, ``√Σ v``, ``Σ⁻¹ v`` and
``√Σ⁻¹ v`` plus its eigenvalues.  Isotropic code paths use
:data:`IDENTITY`, so isotropic and non-isotropic kernels share one
implementation.
"""

from __future__ import annotations

from typing import Protocol

import numpy as np


class CovarianceOperator(Protocol):
    """Symmetric positive-definite operator acting on trailing axes."""

    def apply_sigma(self, v: np.ndarray) -> np.ndarray: ...

    def apply_sqrt_sigma(self, v: np.ndarray) -> np.ndarray: ...

    def apply_inv_sigma(self, v: np.ndarray) -> np.ndarray: ...

    def apply_inv_sqrt_sigma(self, v: np.ndarray) -> np.ndarray: ...

    def eigenvalues(self) -> np.ndarray: ...

    def logdet_sqrt(self) -> float: ...


class IdentityCovariance:
    """``Σ = I`` on any shape.  Every action returns its input unchanged."""

    is_identity = True

    def apply_sigma(self, v):
        return np.asarray(v, dtype=float)

    apply_sqrt_sigma = apply_sigma
    apply_inv_sigma = apply_sigma
    apply_inv_sqrt_sigma = apply_sigma

    def eigenvalues(self) -> np.ndarray:
        return np.ones(1)

    def logdet_sqrt(self) -> float:
        return 0.0

    def __repr__(self) -> str:
        return "IdentityCovariance()"


IDENTITY = IdentityCovariance()


class DenseCovariance:
    """Explicit ``d x d`` covariance acting on the last axis.

    Square roots are the symmetric ones, computed once from an
    eigendecomposition.
    """

    is_identity = False

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        lam, u = np.linalg.eigh(m)
        if lam.min() <= 0:
            raise ValueError(f"covariance must be positive definite (min eig {lam.min():.3g})")
        self.matrix = m
        self.dim = m.shape[0]
        self._lam = lam
        self._sqrt = (u * np.sqrt(lam)) @ u.T
        self._inv = (u / lam) @ u.T
        self._inv_sqrt = (u / np.sqrt(lam)) @ u.T

    def _apply(self, op, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise ValueError(f"expected trailing dimension {self.dim}, got {v.shape[-1]}")
        return v @ op  # op is symmetric

    def apply_sigma(self, v):
        return self._apply(self.matrix, v)

    def apply_sqrt_sigma(self, v):
        return self._apply(self._sqrt, v)

    def apply_inv_sigma(self, v):
        return self._apply(self._inv, v)

    def apply_inv_sqrt_sigma(self, v):
        return self._apply(self._inv_sqrt, v)

    def eigenvalues(self) -> np.ndarray:
        return self._lam.copy()

    def logdet_sqrt(self) -> float:
        return 0.5 * float(np.sum(np.log(self._lam)))

    def __repr__(self) -> str:
        return f"DenseCovariance(dim={self.dim})"
