"""Divergences between weight distributions and closed-form stability bounds.

All calculators take explicit numeric inputs and are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np


def _pair(w1, w2):
    a = np.asarray(w1, dtype=float).ravel()
    b = np.asarray(w2, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"size mismatch: {a.size} vs {b.size}")
    return a, b


def l1_distance(w1, w2) -> float:
    a, b = _pair(w1, w2)
    return float(np.abs(a - b).sum())


def l2_distance(w1, w2) -> float:
    a, b = _pair(w1, w2)
    return float(np.sqrt(((a - b) ** 2).sum()))


@dataclass(frozen=True)
class StabilityReport:
    beta_l1: float
    beta_l2: float
    sigma_admissibility: float
    kappa: float
    lam: float
    lambda_max: float

    def to_dict(self):
        return asdict(self)


def beta_coefficients(sigma: float, kappa: float, lam: float, lambda_max: float) -> StabilityReport:
    """Distributional stability coefficients of kernel ridge regularization.

    ``beta_l1 = sigma^2 kappa^2 / (2 lam)`` and
    ``beta_l2 = sigma^2 kappa sqrt(lambda_max) / (2 lam)``.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if sigma < 0 or kappa <= 0 or lambda_max < 0:
        raise ValueError("sigma, kappa, lambda_max must be non-negative (kappa positive)")
    s2 = sigma**2
    return StabilityReport(
        beta_l1=s2 * kappa**2 / (2 * lam),
        beta_l2=s2 * kappa * math.sqrt(lambda_max) / (2 * lam),
        sigma_admissibility=sigma,
        kappa=kappa,
        lam=lam,
        lambda_max=lambda_max,
    )


@dataclass(frozen=True)
class GapBoundReport:
    method: str  # cluster_l1 | cluster_l2 | kmm | kmm_eps0
    value: float
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return {"method": self.method, "value": self.value, "inputs": dict(self.inputs)}


def _log_term(m_distinct, delta):
    return math.log(2 * m_distinct) + math.log(1 / delta)


def cluster_gap_bounds(sigma, kappa, lam, lambda_max, B, m_distinct, p0, n, m, delta):
    """Generalization-gap bounds between ideal and frequency-estimated weighting.

    Returns ``(l1_report, l2_report)``.
    """
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    if min(sigma, kappa, lam, B, m_distinct, p0, n, m) <= 0 or lambda_max < 0:
        raise ValueError("inputs must be positive")
    rate = _log_term(m_distinct, delta) / (p0 * n)
    inputs = dict(sigma=sigma, kappa=kappa, lam=lam, lambda_max=lambda_max, B=B,
                  m_distinct=m_distinct, p0=p0, n=n, m=m, delta=delta)
    l1 = sigma**2 * kappa**2 * B**2 / (2 * lam) * math.sqrt(rate)
    l2 = sigma**2 * kappa * math.sqrt(lambda_max) * B**2 / (2 * lam) * math.sqrt(rate / m)
    return GapBoundReport("cluster_l1", l1, inputs), GapBoundReport("cluster_l2", l2, inputs)


def _kmm_spread(b_prime, m, n, delta):
    if not (0 < delta <= 2):
        raise ValueError("delta must lie in (0, 2]; values above 1 are algebraic probes only")
    return math.sqrt(b_prime**2 / m + 1.0 / n) * (1 + math.sqrt(2 * math.log(2 / delta)))


def kmm_gap_bound(sigma, kappa, lam, lambda_max, lambda_min, b_prime, epsilon, m, n, delta) -> GapBoundReport:
    """Generalization-gap bound between ideal and KMM weighting (any epsilon)."""
    if not lambda_min > 0:
        raise ValueError("lambda_min must be positive")
    if min(sigma, kappa, lam, lambda_max, b_prime, m, n) <= 0 or epsilon < 0:
        raise ValueError("inputs must be positive")
    inner = epsilon * b_prime / math.sqrt(m) + math.sqrt(kappa / lambda_min) * _kmm_spread(b_prime, m, n, delta)
    value = sigma**2 * kappa * math.sqrt(lambda_max) / lam * inner
    inputs = dict(sigma=sigma, kappa=kappa, lam=lam, lambda_max=lambda_max, lambda_min=lambda_min,
                  cond=lambda_max / lambda_min, b_prime=b_prime, epsilon=epsilon, m=m, n=n, delta=delta)
    return GapBoundReport("kmm", value, inputs)


def kmm_gap_bound_eps0(sigma, kappa, lam, cond, b_prime, m, n, delta) -> GapBoundReport:
    """The epsilon = 0 specialization, written through ``cond(K)``."""
    if min(sigma, kappa, lam, cond, b_prime, m, n) <= 0:
        raise ValueError("inputs must be positive")
    value = sigma**2 * kappa**1.5 * math.sqrt(cond) / lam * _kmm_spread(b_prime, m, n, delta)
    inputs = dict(sigma=sigma, kappa=kappa, lam=lam, cond=cond, b_prime=b_prime, epsilon=0.0,
                  m=m, n=n, delta=delta)
    return GapBoundReport("kmm_eps0", value, inputs)


@dataclass(frozen=True)
class CrossoverReport:
    threshold: float
    n: int
    regime: str  # cluster-favorable | kmm-favorable | boundary

    def to_dict(self):
        return asdict(self)


def crossover_diagnostic(lambda_min, B, m_distinct, n, rtol: float = 1e-12) -> CrossoverReport:
    """Compare ``n`` against ``lambda_min * B * log(m')``.

    Above the threshold the cluster-based bound converges faster, below it
    the KMM bound does. Raw quantity only; no tightness claim.
    """
    if min(lambda_min, B, m_distinct, n) <= 0:
        raise ValueError("inputs must be positive")
    thr = lambda_min * B * math.log(m_distinct)
    if math.isclose(n, thr, rel_tol=rtol, abs_tol=rtol):
        regime = "boundary"
    elif n > thr:
        regime = "cluster-favorable"
    else:
        regime = "kmm-favorable"
    return CrossoverReport(thr, n, regime)
