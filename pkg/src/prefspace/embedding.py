"""Preference embedding: points to vectors in ``[0, 1]^m`` (or ``{0, 1}^m``)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .models import ModelPool, residual_matrix


class PreferenceMode(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"


@dataclass(frozen=True)
class EmbeddingConfig:
    """Noise scale ``sigma``, inlier multiplier ``k`` and preference mode.

    The inlier threshold is ``epsilon = k * sigma``.
    """

    sigma: float
    k: float = 3.0
    mode: PreferenceMode = PreferenceMode.CONTINUOUS

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k}")
        object.__setattr__(self, "mode", PreferenceMode(self.mode))

    @property
    def epsilon(self) -> float:
        return self.k * self.sigma


def preference_value(delta: float, cfg: EmbeddingConfig) -> float:
    """Preference granted to a model given the residual ``delta``."""
    if abs(delta) > cfg.epsilon:
        return 0.0
    if cfg.mode is PreferenceMode.BINARY:
        return 1.0
    return math.exp(-0.5 * (delta / cfg.sigma) ** 2)


def preferences_from_residuals(residuals, cfg: EmbeddingConfig) -> np.ndarray:
    """Vectorized :func:`preference_value` over an array of residuals."""
    r = np.abs(np.asarray(residuals, dtype=float))
    inlier = r <= cfg.epsilon
    if cfg.mode is PreferenceMode.BINARY:
        return inlier.astype(float)
    return np.where(inlier, np.exp(-0.5 * (r / cfg.sigma) ** 2), 0.0)


def embed_point(x, pool: ModelPool, cfg: EmbeddingConfig) -> np.ndarray:
    return embed_dataset(np.asarray(x, dtype=float)[None, :], pool, cfg)[0]


def embed_dataset(data, pool: ModelPool, cfg: EmbeddingConfig) -> np.ndarray:
    """Preference matrix of shape ``(n, m)``; row ``j`` embeds point ``j``.

    ``data`` is a :class:`~prefspace.datagen.Dataset` or an ``(n, 2)`` array.
    """
    pts = np.asarray(getattr(data, "points", data), dtype=float)
    return preferences_from_residuals(residual_matrix(pool, pts), cfg)
