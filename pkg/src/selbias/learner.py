"""Weighted kernel ridge regression.

Minimizes ``sum_i W_i (h(x_i) - y_i)^2 + lam * ||h||_K^2`` over the RKHS of a
Gaussian kernel, where ``W`` is a probability distribution over the sample.
The minimizer is ``h = sum_i alpha_i K(x_i, .)`` with

    (diag(W) K + lam I) alpha = diag(W) y.

With ``D = diag(sqrt(W))`` this is solved through the symmetric positive
definite system ``(D K D + lam I) beta = D y``, ``alpha = D beta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .kernels import KernelSpec, cross_gram

#: Diagonal jitter tried when the first Cholesky factorization fails.
JITTER = 1e-10


class SingularSystemError(np.linalg.LinAlgError):
    """The stationarity system could not be factorized even with jitter."""


def normalize(weights) -> np.ndarray:
    """Map non-negative raw weights to a distribution (sums to one)."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-d array")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if total <= 0:
        raise ValueError("at least one weight must be positive")
    return w / total


@dataclass(frozen=True)
class WeightedSample:
    X: np.ndarray
    y: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        w = np.asarray(self.weights, dtype=float).ravel()
        if not (X.shape[0] == y.size == w.size):
            raise ValueError(
                f"length mismatch: {X.shape[0]} points, {y.size} labels, {w.size} weights"
            )
        normalize(w)  # validates
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.y.size

    @property
    def distribution(self) -> np.ndarray:
        return normalize(self.weights)


@dataclass(frozen=True)
class Hypothesis:
    dual_coefficients: np.ndarray
    support_points: np.ndarray
    kernel: KernelSpec
    lam: float

    def __call__(self, X) -> np.ndarray:
        return predict(self, X)

    def rkhs_norm_sq(self) -> float:
        K = cross_gram(self.kernel, self.support_points, self.support_points)
        a = self.dual_coefficients
        return float(a @ K @ a)


def objective(h: Hypothesis, sample: WeightedSample) -> float:
    """``F_W(h)`` for the normalized weights of ``sample``."""
    W = sample.distribution
    resid = predict(h, sample.X) - sample.y
    return float(W @ resid**2) + h.lam * h.rkhs_norm_sq()


def fit(sample: WeightedSample, kernel: KernelSpec, lam: float, K: np.ndarray | None = None) -> Hypothesis:
    """Fit weighted KRR. Raw weights are normalized to a distribution first.

    ``K`` may pass a precomputed Gram matrix of ``sample.X``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    W = sample.distribution
    if K is None:
        K = cross_gram(kernel, sample.X, sample.X)
    d = np.sqrt(W)
    A = d[:, None] * K * d[None, :]
    A = 0.5 * (A + A.T)
    A[np.diag_indices_from(A)] += lam
    rhs = d * sample.y
    try:
        beta = scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), rhs)
    except np.linalg.LinAlgError:
        A[np.diag_indices_from(A)] += JITTER
        try:
            beta = scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), rhs)
        except np.linalg.LinAlgError as exc:
            cond = np.linalg.cond(A)
            raise SingularSystemError(f"stationarity system is singular (cond={cond:.3e})") from exc
    return Hypothesis(d * beta, sample.X.copy(), kernel, float(lam))


def predict(h: Hypothesis, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1 and X.size == h.support_points.shape[1] and h.support_points.shape[1] > 1
    if X.ndim == 1:
        X = X[None, :] if single else X[:, None]
    if X.shape[1] != h.support_points.shape[1]:
        raise ValueError(
            f"dimension mismatch: expected {h.support_points.shape[1]} features, got {X.shape[1]}"
        )
    return cross_gram(h.kernel, X, h.support_points) @ h.dual_coefficients


def cost(h: Hypothesis, x, y) -> np.ndarray | float:
    """Squared error ``(h(x) - y)^2``; vectorized over rows of ``x``."""
    pred = predict(h, x)
    out = (pred - np.asarray(y, dtype=float)) ** 2
    return float(out[0]) if out.size == 1 else out
