"""Stationary covariance functions and the standard normal CDF.

Everything in this module is a pure function: there is no fitted state.
Distances are Euclidean in the (normalized) input space, and the only
covariance family used by the surrogate layer is the Matern 5/2 kernel

    k(r) = variance * (1 + sqrt(5) r / l + 5 r^2 / (3 l^2)) * exp(-sqrt(5) r / l).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import erfc

__all__ = [
    "KernelParams",
    "matern52",
    "matern52_from_distance",
    "matern52_matrix",
    "gram_matrix",
    "std_normal_cdf",
]

_SQRT5 = np.sqrt(5.0)
_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class KernelParams:
    """Matern 5/2 hyperparameters.

    lengthscale is in input-space units, variance in squared output units.
    Both must be strictly positive.
    """

    lengthscale: float
    variance: float

    def __post_init__(self):
        if not (np.isfinite(self.lengthscale) and self.lengthscale > 0.0):
            raise ValueError(f"lengthscale must be finite and > 0, got {self.lengthscale}")
        if not (np.isfinite(self.variance) and self.variance > 0.0):
            raise ValueError(f"variance must be finite and > 0, got {self.variance}")


def matern52_from_distance(r, params: KernelParams):
    """Matern 5/2 covariance as a function of Euclidean distance ``r >= 0``."""
    u = (_SQRT5 / params.lengthscale) * np.asarray(r, dtype=float)
    return params.variance * (1.0 + u * (1.0 + u / 3.0)) * np.exp(-u)


def matern52(x1, x2, params: KernelParams) -> float:
    """Covariance between two input vectors of equal dimension."""
    a = np.atleast_1d(np.asarray(x1, dtype=float))
    b = np.atleast_1d(np.asarray(x2, dtype=float))
    if a.shape != b.shape or a.ndim != 1 or a.size < 1:
        raise ValueError(f"inputs must be equal-length vectors, got shapes {a.shape} and {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite kernel inputs")
    r = np.sqrt(np.sum((a - b) ** 2))
    return float(matern52_from_distance(r, params))


def matern52_matrix(X1, X2, params: KernelParams) -> np.ndarray:
    """Cross-covariance matrix between the rows of X1 (n, k) and X2 (m, k)."""
    X1 = np.atleast_2d(np.asarray(X1, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    if X1.shape[1] != X2.shape[1]:
        raise ValueError(f"input dimension mismatch: {X1.shape[1]} vs {X2.shape[1]}")
    return matern52_from_distance(cdist(X1, X2), params)


def gram_matrix(X, params: KernelParams, noise_var: float) -> np.ndarray:
    """Training Gram matrix k(X, X) + noise_var * I.

    Symmetric by construction; positive definite whenever noise_var > 0 or
    the rows of X are distinct.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("gram_matrix needs at least one input point")
    if noise_var < 0.0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    K = matern52_matrix(X, X, params)
    if noise_var > 0.0:
        K = K + noise_var * np.eye(X.shape[0])
    return K


def std_normal_cdf(z):
    """Standard normal CDF, evaluated through erfc for tail accuracy.

    Accepts scalars or arrays; scalars come back as Python floats.
    """
    out = 0.5 * erfc(-np.asarray(z, dtype=float) * _INV_SQRT2)
    if np.ndim(z) == 0:
        return float(out)
    return out
