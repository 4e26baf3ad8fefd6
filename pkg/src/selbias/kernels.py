"""Gaussian kernel evaluation, Gram matrices and their extreme eigenvalues."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels

#: Matrices up to this size get a dense symmetric eigendecomposition.
DENSE_EIG_LIMIT = 4096
#: Floor applied to lambda_min before it enters a condition number.
LAMBDA_MIN_FLOOR = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel ``exp(-||x - x'||^2 / (2 bandwidth^2))``.

    ``bandwidth`` is in feature units. :meth:`default` gives ``sqrt(d/2)``.
    """

    bandwidth: float
    family: str = "gaussian"

    def __post_init__(self):
        if self.family != "gaussian":
            raise ValueError(f"unsupported kernel family {self.family!r}")
        if not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")

    @classmethod
    def default(cls, dim: int) -> "KernelSpec":
        return cls(math.sqrt(dim / 2.0))

    @property
    def kappa(self) -> float:
        """Upper bound on K(x, x); exactly 1 for the Gaussian family."""
        return 1.0


@dataclass(frozen=True)
class KernelMatrix:
    entries: np.ndarray
    lambda_max: float
    lambda_min: float
    lambda_min_raw: float = field(default=float("nan"))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def cond(self) -> float:
        return self.lambda_max / self.lambda_min


def _as_points(points) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"points must be a 2-d array, got shape {X.shape}")
    return X


def evaluate(spec: KernelSpec, x, x2) -> float:
    a = np.atleast_1d(np.asarray(x, dtype=float))
    b = np.atleast_1d(np.asarray(x2, dtype=float))
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.exp(-(diff @ diff) / (2.0 * spec.bandwidth**2)))


def cross_gram(spec: KernelSpec, X, Y) -> np.ndarray:
    """Rectangular kernel matrix ``K[i, j] = K(X[i], Y[j])``."""
    X = np.ascontiguousarray(_as_points(X))
    Y = np.ascontiguousarray(_as_points(Y))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    D = _kernels.sq_dists(X, Y)
    return np.exp(-D / (2.0 * spec.bandwidth**2))


def gram(spec: KernelSpec, points) -> KernelMatrix:
    X = _as_points(points)
    if X.shape[0] == 0:
        raise ValueError("gram needs at least one point")
    K = cross_gram(spec, X, X)
    K = 0.5 * (K + K.T)
    lmax, lmin = spectral_bounds(K)
    return KernelMatrix(K, lmax, max(lmin, LAMBDA_MIN_FLOOR), lmin)


def _check_symmetric(K: np.ndarray) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {K.shape}")
    scale = max(1.0, float(np.abs(K).max(initial=0.0)))
    if not np.allclose(K, K.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("matrix is not symmetric")
    return K


def _power_max(K, tol, max_iter, rng):
    v = rng.standard_normal(K.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = K @ v
        lam = float(v @ w)
        if np.linalg.norm(w - lam * v) <= tol * abs(lam):
            break
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
    return lam


def _inverse_min(K, tol, max_iter, rng):
    # small shift keeps the factorization defined on singular PSD input
    shift = 1e-14 * max(1.0, float(np.trace(K)) / K.shape[0])
    factor = scipy.linalg.cho_factor(K + shift * np.eye(K.shape[0]))
    scale = float(np.abs(K).max())
    v = rng.standard_normal(K.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = scipy.linalg.cho_solve(factor, v)
        v = w / np.linalg.norm(w)
        Kv = K @ v
        lam = float(v @ Kv)
        if np.linalg.norm(Kv - lam * v) <= tol * max(abs(lam), 1e-16 * scale):
            break
    return lam


def spectral_bounds(matrix, tol: float = 1e-8) -> tuple[float, float]:
    """Largest and smallest eigenvalue of a symmetric matrix.

    Dense ``eigvalsh`` up to :data:`DENSE_EIG_LIMIT` rows, power iteration
    and Cholesky-based inverse iteration above that.
    """
    K = matrix.entries if isinstance(matrix, KernelMatrix) else matrix
    K = _check_symmetric(K)
    if K.shape[0] <= DENSE_EIG_LIMIT:
        ev = scipy.linalg.eigvalsh(K)
        return float(ev[-1]), float(ev[0])
    rng = np.random.default_rng(0)
    return _power_max(K, tol, 10_000, rng), _inverse_min(K, tol, 1_000, rng)
