"""Exact zero-mean GP regression with box-constrained hyperparameter fitting.

The posterior is the textbook conditional

    mean(x*) = k(x*, X) (K + s2 I)^-1 y
    var(x*)  = k(x*, x*) - k(x*, X) (K + s2 I)^-1 k(X, x*)

with a Matern 5/2 kernel and a fixed likelihood variance ``s2``. Predictive
variance is the latent variance (no likelihood noise added back). Kernel
hyperparameters are chosen by maximizing the log marginal likelihood with a
multi-start bounded quasi-Newton search inside the supplied box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.optimize import minimize
from scipy.stats import qmc

from .kernels import KernelParams, matern52_matrix

__all__ = [
    "FactorizationError",
    "RegressionDataset",
    "RegressionPosterior",
    "log_marginal_likelihood",
    "fit",
]

_SQRT5 = np.sqrt(5.0)
_LOG_2PI = np.log(2.0 * np.pi)

# Geometric jitter ladder used when a Gram factorization fails.
_JITTERS = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

DEFAULT_LENGTHSCALE_BOUNDS = (1e-6, 0.2)
DEFAULT_VARIANCE_BOUNDS = (0.5, 1.0)
DEFAULT_NOISE_VAR = 0.005**2


class FactorizationError(RuntimeError):
    """Raised when a Gram matrix cannot be Cholesky-factorized."""


@dataclass(frozen=True)
class RegressionDataset:
    """Training inputs X (n, k) and finite real targets y (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if X.shape[0] < 1:
            raise ValueError("regression dataset must contain at least one sample")
        if y.shape != (X.shape[0],):
            raise ValueError(f"target shape {y.shape} does not match {X.shape[0]} inputs")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite inputs in regression dataset")
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite targets in regression dataset (undefined values must be filtered upstream)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def _cholesky_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of K, escalating diagonal jitter on failure."""
    n = K.shape[0]
    for jitter in _JITTERS:
        try:
            L = linalg.cholesky(K + jitter * np.eye(n) if jitter else K, lower=True)
            return L, jitter
        except linalg.LinAlgError:
            continue
    raise FactorizationError(
        f"Gram factorization failed for n={n} points after jitter escalation to {_JITTERS[-1]:g}"
    )


def _correlation_parts(R: np.ndarray, lengthscale: float):
    """Unit-variance Matern 5/2 correlation plus pieces reused by the gradient."""
    u = (_SQRT5 / lengthscale) * R
    E = np.exp(-u)
    C = (1.0 + u * (1.0 + u / 3.0)) * E
    return C, E, u


@dataclass(frozen=True)
class RegressionPosterior:
    """Fitted GP regression posterior.

    Immutable once constructed; safe to query from concurrent workers.
    """

    params: KernelParams
    noise_var: float
    X: np.ndarray
    chol: np.ndarray       # lower triangular factor of K + noise_var I
    weights: np.ndarray    # (K + noise_var I)^-1 y
    jitter: float = 0.0

    def predict(self, x):
        """Predictive mean and standard deviation at one point or a batch.

        A 1-D input of length k is a single point and returns floats; an
        (m, k) matrix returns two length-m arrays.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        Xq = np.atleast_2d(x)
        if Xq.shape[1] != self.X.shape[1]:
            raise ValueError(
                f"query dimension {Xq.shape[1]} does not match training dimension {self.X.shape[1]}"
            )
        ks = matern52_matrix(Xq, self.X, self.params)
        mean = ks @ self.weights
        v = linalg.solve_triangular(self.chol, ks.T, lower=True)
        var = self.params.variance - np.sum(v * v, axis=0)
        var = np.clip(var, 0.0, self.params.variance + self.noise_var)
        std = np.sqrt(var)
        if single:
            return float(mean[0]), float(std[0])
        return mean, std


def _nll_value_grad(theta, R, y, noise_var):
    """Negative log marginal likelihood and its gradient wrt (lengthscale, variance).

    Returns a large penalty (with zero gradient) if the Gram matrix cannot be
    factorized at these hyperparameters, so bounded optimizers can step past.
    """
    ell, var = theta
    n = y.shape[0]
    C, E, u = _correlation_parts(R, ell)
    K = var * C
    K[np.diag_indices_from(K)] += noise_var
    try:
        L = linalg.cholesky(K, lower=True)
    except linalg.LinAlgError:
        return 1e25, np.zeros(2)
    alpha = linalg.cho_solve((L, True), y)
    nll = 0.5 * float(y @ alpha) + float(np.sum(np.log(np.diag(L)))) + 0.5 * n * _LOG_2PI
    K_inv = linalg.cho_solve((L, True), np.eye(n))
    A = np.outer(alpha, alpha) - K_inv
    dK_dell = var * E * u * u * (1.0 + u) / (3.0 * ell)
    dK_dvar = C
    grad = -0.5 * np.array([np.sum(A * dK_dell), np.sum(A * dK_dvar)])
    return nll, grad


def log_marginal_likelihood(data: RegressionDataset, params: KernelParams, noise_var: float) -> float:
    """Zero-mean GP evidence log p(y | X, params, noise_var).

    Evaluated exactly as written (no jitter): a singular Gram matrix raises
    FactorizationError.
    """
    if noise_var < 0.0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    K = matern52_matrix(data.X, data.X, params) * 1.0
    K[np.diag_indices_from(K)] += noise_var
    try:
        L = linalg.cholesky(K, lower=True)
    except linalg.LinAlgError as exc:
        raise FactorizationError(
            f"Gram factorization failed for n={data.n} points at lengthscale={params.lengthscale:g}, "
            f"variance={params.variance:g}, noise_var={noise_var:g}"
        ) from exc
    alpha = linalg.cho_solve((L, True), data.y)
    return -0.5 * float(data.y @ alpha) - float(np.sum(np.log(np.diag(L)))) - 0.5 * data.n * _LOG_2PI


def fit(
    data: RegressionDataset,
    lengthscale_bounds=DEFAULT_LENGTHSCALE_BOUNDS,
    variance_bounds=DEFAULT_VARIANCE_BOUNDS,
    noise_var: float = DEFAULT_NOISE_VAR,
    n_starts: int = 5,
) -> RegressionPosterior:
    """Fit kernel hyperparameters by constrained evidence maximization.

    A Latin-hypercube multi-start (fixed seed, so the fit is a deterministic
    function of the data) feeds L-BFGS-B with analytic gradients; the best
    local optimum wins. The returned posterior caches the Cholesky factor and
    the weight vector.
    """
    lo = np.array([lengthscale_bounds[0], variance_bounds[0]], dtype=float)
    hi = np.array([lengthscale_bounds[1], variance_bounds[1]], dtype=float)
    if not np.all(lo < hi):
        raise ValueError(f"invalid hyperparameter box: {lengthscale_bounds}, {variance_bounds}")
    if noise_var < 0.0:
        raise ValueError(f"noise_var must be >= 0, got {noise_var}")
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")

    from scipy.spatial.distance import cdist

    R = cdist(data.X, data.X)

    starts = lo + qmc.LatinHypercube(d=2, seed=0).random(n_starts) * (hi - lo)
    best = None
    for theta0 in starts:
        res = minimize(
            _nll_value_grad,
            theta0,
            args=(R, data.y, noise_var),
            jac=True,
            method="L-BFGS-B",
            bounds=list(zip(lo, hi)),
        )
        if best is None or res.fun < best.fun:
            best = res

    ell, var = (float(best.x[0]), float(best.x[1]))
    params = KernelParams(lengthscale=ell, variance=var)
    K = matern52_matrix(data.X, data.X, params)
    K[np.diag_indices_from(K)] += noise_var
    L, jitter = _cholesky_with_jitter(K)
    weights = linalg.cho_solve((L, True), data.y)
    return RegressionPosterior(
        params=params,
        noise_var=float(noise_var),
        X=data.X,
        chol=L,
        weights=weights,
        jitter=jitter,
    )
