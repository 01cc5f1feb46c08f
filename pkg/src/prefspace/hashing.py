"""RuzHash: random-threshold binarization followed by MinHash bucketing.

A split rule draws one threshold vector ``tau`` and one permutation of the
``m`` dimensions. A preference vector ``p`` is binarized as ``p > tau`` and
hashed to the first dimension, in permutation order, whose bit is set. Since
``P(p_i > tau_i) = p_i`` for ``tau_i ~ U[0, 1)``, two vectors share bit ``i``
with probability ``min(p_i, q_i)`` and at least one has it with probability
``max(p_i, q_i)``, which ties collisions to the Ruzicka similarity.

Buckets are 0-based dimension indices; :data:`EMPTY` (``-1``) is the bucket of
an all-zero binarization. The ``m`` buckets are then randomly aggregated into
``b`` balanced groups, which become the children of a tree node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EMPTY = -1


@dataclass(frozen=True)
class SplitRule:
    """Per-node hashing state.

    ``group_of`` has length ``m + 1``: entry ``i < m`` is the group of bucket
    ``i`` and the last entry is the group of :data:`EMPTY`, so
    ``group_of[bucket]`` works for every bucket value.
    """

    tau: np.ndarray
    perm: np.ndarray
    group_of: np.ndarray
    b: int

    @property
    def m(self) -> int:
        return self.tau.shape[0]


def sample_thresholds(m: int, rng: np.random.Generator) -> np.ndarray:
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return rng.random(m)


def binarize(p, tau) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if p.shape[-1] != tau.shape[-1]:
        raise ValueError(f"dimension mismatch: {p.shape} vs {tau.shape}")
    return (p > tau).astype(np.uint8)


def minhash_bucket(pb, perm) -> int:
    """First dimension, in ``perm`` order, whose bit is set; ``EMPTY`` if none."""
    pb = np.asarray(pb)
    perm = np.asarray(perm)
    if pb.shape != perm.shape:
        raise ValueError(f"dimension mismatch: {pb.shape} vs {perm.shape}")
    ordered = pb[perm] != 0
    if not ordered.any():
        return EMPTY
    return int(perm[np.argmax(ordered)])


def make_split_rule(m: int, b: int, rng: np.random.Generator) -> SplitRule:
    """Fresh thresholds and permutation plus a balanced random bucket grouping."""
    if not 1 <= b <= m:
        raise ValueError(f"branching factor must satisfy 1 <= b <= m, got b={b}, m={m}")
    tau = sample_thresholds(m, rng)
    perm = rng.permutation(m)
    group_of = np.empty(m + 1, dtype=np.intp)
    group_of[:m] = rng.permutation(np.arange(m) % b)
    group_of[m] = rng.integers(b)
    return SplitRule(tau=tau, perm=perm, group_of=group_of, b=b)


def ruzhash_buckets(P, rule: SplitRule) -> np.ndarray:
    """MinHash bucket of ``binarize(p, rule.tau)`` for every row ``p`` of ``P``.

    Scans the permutation in growing chunks and stops as soon as every row has
    found a set bit, so dense rows cost far less than ``m`` comparisons.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if P.shape[1] != rule.m:
        raise ValueError(f"dimension mismatch: rows have {P.shape[1]}, rule has {rule.m}")
    out = np.full(P.shape[0], EMPTY, dtype=np.intp)
    pending = np.arange(P.shape[0])
    start, chunk = 0, 32
    while pending.size and start < rule.m:
        cols = rule.perm[start : start + chunk]
        bits = P[np.ix_(pending, cols)] > rule.tau[cols]
        hit = bits.any(axis=1)
        out[pending[hit]] = cols[bits[hit].argmax(axis=1)]
        pending = pending[~hit]
        start += chunk
        chunk *= 2
    return out


def split_groups(P, rule: SplitRule) -> np.ndarray:
    """Group id in ``range(rule.b)`` for every row of ``P``."""
    return rule.group_of[ruzhash_buckets(P, rule)]


def apply_split(points, rule: SplitRule) -> list[np.ndarray]:
    """Partition ``points`` into ``rule.b`` arrays of rows (some possibly empty)."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    groups = split_groups(P, rule)
    return [P[groups == g] for g in range(rule.b)]


def estimate_ruzicka(p, q, trials: int, rng: np.random.Generator) -> float:
    """Sampling estimate of the Ruzicka distance from ``trials`` threshold draws.

    Counts of shared and of any set bits are pooled over all trials and
    dimensions before taking the ratio.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"dimension mismatch: {p.shape} vs {q.shape}")
    both = either = 0
    batch = max(1, 2_000_000 // max(p.size, 1))
    done = 0
    while done < trials:
        size = min(batch, trials - done)
        tau = rng.random((size, p.size))
        pb, qb = p > tau, q > tau
        both += np.count_nonzero(pb & qb)
        either += np.count_nonzero(pb | qb)
        done += size
    if either == 0:
        return 0.0
    return 1.0 - both / either
