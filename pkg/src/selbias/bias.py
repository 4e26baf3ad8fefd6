"""Logistic selection bias driven by a random projection of the features.

A point ``x`` of the pool is kept with probability ``e^v / (1 + e^v)`` where
``v = 4 w.(x - center) / scale`` and ``scale`` is the pool standard deviation
of ``w.(x - center)``. Labels never enter the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

#: v is clamped to this range before the logistic is applied.
V_CLAMP = 40.0
#: Redraws tried by :func:`make_model` when a projection has zero variance.
MAX_REDRAWS = 100


@dataclass(frozen=True)
class BiasModel:
    projection: np.ndarray
    center: np.ndarray
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def logits(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        v = 4.0 * ((X - self.center) @ self.projection) / self.scale
        return np.clip(v, -V_CLAMP, V_CLAMP)

    def probabilities(self, X) -> np.ndarray:
        return expit(self.logits(X))

    @classmethod
    def uniform(cls, dim: int) -> "BiasModel":
        """Degenerate model with ``v = 0`` everywhere, i.e. ``P = 1/2``."""
        return cls(np.zeros(dim), np.zeros(dim), 1.0)


@dataclass(frozen=True)
class BiasedDraw:
    selected: np.ndarray
    probabilities: np.ndarray
    seed: int | None

    @property
    def selected_probabilities(self) -> np.ndarray:
        return self.probabilities[self.selected]

    def __len__(self):
        return self.selected.size


def make_model(pool, seed) -> BiasModel:
    """Draw ``w`` uniformly from ``[-1, 1]^d`` and fit center/scale on the pool."""
    X = np.asarray(pool, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("pool is empty")
    rng = np.random.default_rng(seed)
    center = X.mean(axis=0)
    Xc = X - center
    for _ in range(MAX_REDRAWS):
        w = rng.uniform(-1.0, 1.0, size=X.shape[1])
        scale = float(np.std(Xc @ w))
        if scale > 0:
            return BiasModel(w, center, scale)
    raise ValueError("pool projections have zero variance (constant pool?)")


def draw(pool, model: BiasModel, seed) -> BiasedDraw:
    """Include each pool point independently with probability ``P(x)``."""
    p = model.probabilities(pool)
    u = np.random.default_rng(seed).random(p.size)
    return BiasedDraw(np.flatnonzero(u < p), p, seed)


def ideal_weights(draw: BiasedDraw) -> np.ndarray:
    """Raw inverse-probability weights ``1 / P(x_i)`` of the selected points."""
    p = draw.selected_probabilities
    if np.any(p <= 0):
        raise ValueError("selected point with zero sampling probability (support violation)")
    return 1.0 / p
