"""Exact distances between preference vectors.

Conventions for empty preferences: two all-zero vectors are at distance 0;
an all-zero vector and a nonzero one are at distance 1.

The ``pairwise`` helpers compute a full ``(len(X), len(C))`` block at once and
are what the Voronoi splitter uses; the scalar functions are reference
implementations built on them.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class DistanceKind(str, Enum):
    RUZICKA = "ruzicka"
    TANIMOTO = "tanimoto"
    JACCARD = "jaccard"


def _similarity_to_distance(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # den == 0 only when both vectors are all-zero: similarity 1 by convention.
    with np.errstate(divide="ignore", invalid="ignore"):
        sim = np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)
    return np.clip(1.0 - sim, 0.0, 1.0)


def pairwise_ruzicka(X, C) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    mins = np.empty((X.shape[0], C.shape[0]))
    XT = np.ascontiguousarray(X.T)
    # min(x_i, c_i) vanishes off the support of c; preference rows are sparse
    for j, c in enumerate(C):
        cols = np.flatnonzero(c)
        mins[:, j] = np.minimum(XT[cols], c[cols, None]).sum(axis=0)
    # sum(max) = sum(x) + sum(c) - sum(min) for componentwise pairs
    maxs = X.sum(axis=1)[:, None] + C.sum(axis=1)[None, :] - mins
    return _similarity_to_distance(mins, maxs)


def pairwise_tanimoto(X, C) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    dots = X @ C.T
    den = (X * X).sum(axis=1)[:, None] + (C * C).sum(axis=1)[None, :] - dots
    return _similarity_to_distance(dots, den)


def pairwise_jaccard(X, C) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X)) != 0
    C = np.atleast_2d(np.asarray(C)) != 0
    Xf, Cf = X.astype(float), C.astype(float)
    inter = Xf @ Cf.T
    union = Xf.sum(axis=1)[:, None] + Cf.sum(axis=1)[None, :] - inter
    return _similarity_to_distance(inter, union)


PAIRWISE = {
    DistanceKind.RUZICKA: pairwise_ruzicka,
    DistanceKind.TANIMOTO: pairwise_tanimoto,
    DistanceKind.JACCARD: pairwise_jaccard,
}


def pairwise(kind, X, C) -> np.ndarray:
    return PAIRWISE[DistanceKind(kind)](X, C)


def _check_dims(p, q):
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    return p, q


def ruzicka(p, q) -> float:
    """``1 - sum(min(p, q)) / sum(max(p, q))``."""
    p, q = _check_dims(p, q)
    num = np.minimum(p, q).sum()
    den = np.maximum(p, q).sum()
    return float(_similarity_to_distance(np.asarray(num), np.asarray(den)))


def tanimoto(p, q) -> float:
    """``1 - <p, q> / (|p|^2 + |q|^2 - <p, q>)``."""
    p, q = _check_dims(p, q)
    dot = p @ q
    return float(_similarity_to_distance(np.asarray(dot), np.asarray(p @ p + q @ q - dot)))


def jaccard(p, q) -> float:
    """Jaccard distance between the supports of two binary vectors."""
    p, q = _check_dims(p, q)
    if not (np.isin(p, (0.0, 1.0)).all() and np.isin(q, (0.0, 1.0)).all()):
        raise ValueError("jaccard distance is only defined for binary vectors")
    a, b = p != 0, q != 0
    inter = np.count_nonzero(a & b)
    union = np.count_nonzero(a | b)
    return float(_similarity_to_distance(np.asarray(float(inter)), np.asarray(float(union))))


def distance(kind, p, q) -> float:
    kind = DistanceKind(kind)
    return {DistanceKind.RUZICKA: ruzicka, DistanceKind.TANIMOTO: tanimoto, DistanceKind.JACCARD: jaccard}[kind](p, q)
