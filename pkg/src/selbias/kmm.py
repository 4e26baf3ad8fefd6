"""Kernel mean matching.

Finds weights ``gamma`` on the training points that bring the weighted
empirical mean embedding of the sample close to that of the unlabeled pool:

    min  G(gamma) = || (1/m) sum_i gamma_i Phi(x_i) - (1/n) sum_j Phi(x'_j) ||
    s.t. 0 <= gamma_i <= B',  |(1/m) sum_i gamma_i - 1| <= eps

``G^2`` is minimized by projected gradient descent with step ``1/L``,
``L = 2 lambda_max(K_SS) / m^2``. The projection onto box and slab is exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .kernels import LAMBDA_MIN_FLOOR, KernelSpec, cross_gram, spectral_bounds


@dataclass(frozen=True)
class KmmConfig:
    b_prime: float = 1000.0
    epsilon: float = 0.0
    tolerance: float = 1e-10
    max_iterations: int = 50_000

    def __post_init__(self):
        if not self.b_prime >= 1:
            raise ValueError(f"b_prime must be >= 1 so that gamma = 1 is feasible, got {self.b_prime}")
        if not 0 <= self.epsilon <= 0.5:
            raise ValueError(f"epsilon must lie in [0, 1/2], got {self.epsilon}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class KmmSolution:
    gamma_hat: np.ndarray
    epsilon_prime: float
    objective: float
    iterations: int
    converged: bool
    b_prime: float
    history: np.ndarray = field(repr=False)
    path: np.ndarray | None = field(default=None, repr=False)
    warnings: tuple[str, ...] = ()

    @property
    def gamma_hat_prime(self) -> np.ndarray:
        return self.gamma_hat / (1.0 + self.epsilon_prime)

    @property
    def m(self) -> int:
        return self.gamma_hat.size


@dataclass(frozen=True)
class _Problem:
    k_ss: np.ndarray
    row_sums: np.ndarray  # K_SU 1
    k_uu_mean: float
    n: int


def _prepare(s_points, u_points, kernel: KernelSpec, chunk: int = 2048) -> _Problem:
    S = np.asarray(s_points, dtype=float)
    U = np.asarray(u_points, dtype=float)
    if S.ndim == 1:
        S = S[:, None]
    if U.ndim == 1:
        U = U[:, None]
    if S.shape[0] < 1 or U.shape[0] < 1:
        raise ValueError("need at least one sample point and one pool point")
    k_ss = cross_gram(kernel, S, S)
    k_ss = 0.5 * (k_ss + k_ss.T)
    n = U.shape[0]
    # constant term and cross row sums accumulated by blocks of U
    row_sums = np.zeros(S.shape[0])
    total = 0.0
    for start in range(0, n, chunk):
        block = U[start : start + chunk]
        row_sums += cross_gram(kernel, S, block).sum(axis=1)
        total += cross_gram(kernel, block, U).sum()
    return _Problem(k_ss, row_sums, total / float(n) ** 2, n)


def objective(gamma, k_ss, k_su, k_uu_mean: float) -> float:
    """``G(gamma)`` through the kernel expansion of the squared norm."""
    gamma = np.asarray(gamma, dtype=float)
    k_ss = np.asarray(k_ss, dtype=float)
    k_su = np.asarray(k_su, dtype=float)
    m = gamma.size
    if k_ss.shape != (m, m) or k_su.ndim != 2 or k_su.shape[0] != m:
        raise ValueError(f"shape mismatch: gamma {gamma.shape}, k_ss {k_ss.shape}, k_su {k_su.shape}")
    n = k_su.shape[1]
    return _objective(gamma, k_ss, k_su.sum(axis=1), k_uu_mean, m, n)


def _objective(gamma, k_ss, row_sums, k_uu_mean, m, n) -> float:
    sq = gamma @ k_ss @ gamma / m**2 - 2.0 * (gamma @ row_sums) / (m * n) + k_uu_mean
    return math.sqrt(max(0.0, float(sq)))


def solve(s_points, u_points, kernel: KernelSpec, config: KmmConfig = KmmConfig(),
          keep_path: bool = False) -> KmmSolution:
    """Solve the KMM program, starting from the feasible point ``gamma = 1``.

    ``keep_path`` stores every iterate (``iterations + 1`` rows), meant for
    small diagnostic problems.
    """
    prob = _prepare(s_points, u_points, kernel)
    return _solve(prob, config, keep_path)


def _solve(prob: _Problem, config: KmmConfig, keep_path: bool = False) -> KmmSolution:
    m = prob.k_ss.shape[0]
    notes = []
    lmax, lmin = spectral_bounds(prob.k_ss)
    if lmin < LAMBDA_MIN_FLOOR:
        notes.append(f"K_SS is not strictly positive definite (lambda_min={lmin:.3e}); near-duplicate points or a wide bandwidth")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=3)
    step = m**2 / (2.0 * lmax)
    lo = m * (1.0 - config.epsilon)
    hi = m * (1.0 + config.epsilon)
    gamma, history, path, converged = _kernels.kmm_pgd(
        np.ascontiguousarray(prob.k_ss),
        np.ascontiguousarray(prob.row_sums),
        prob.n,
        float(config.b_prime),
        lo,
        hi,
        np.ones(m),
        step,
        float(config.tolerance),
        int(config.max_iterations),
        bool(keep_path),
    )
    eps_prime = float(gamma.mean() - 1.0)
    if config.epsilon == 0.0:
        eps_prime = 0.0
    obj = _objective(gamma, prob.k_ss, prob.row_sums, prob.k_uu_mean, m, prob.n)
    if not converged:
        notes.append(f"max_iterations={config.max_iterations} reached without meeting tolerance")
    return KmmSolution(
        gamma_hat=gamma,
        epsilon_prime=eps_prime,
        objective=obj,
        iterations=history.size - 1,
        converged=bool(converged),
        b_prime=float(config.b_prime),
        history=np.sqrt(np.maximum(history + prob.k_uu_mean, 0.0)),
        path=path if keep_path else None,
        warnings=tuple(notes),
    )


def normalized_weights(solution: KmmSolution) -> np.ndarray:
    """``gamma_hat' / m``, renormalized so the weights sum to one."""
    w = solution.gamma_hat_prime / solution.m
    return w / w.sum()


def kmm_l2_deviation_bound(epsilon, b_prime, m, n, kappa, lambda_min, delta) -> float:
    """l2 distance bound between KMM's normalized weights and ideal ones."""
    if not lambda_min > 0:
        raise ValueError("lambda_min must be positive (kernel must be strictly PD)")
    if min(b_prime, m, n, kappa, delta) <= 0 or epsilon < 0:
        raise ValueError("arguments must be positive")
    if delta > 2:
        raise ValueError("delta above 2 makes the confidence term undefined")
    spread = math.sqrt(b_prime**2 / m + 1.0 / n)
    conf = 1.0 + math.sqrt(2.0 * math.log(2.0 / delta))
    return 2 * epsilon * b_prime / math.sqrt(m) + 2 * math.sqrt(kappa) / math.sqrt(lambda_min) * spread * conf
