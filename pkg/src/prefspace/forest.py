"""Isolation forests in the preference space.

Two splitting schemes share the same tree, forest and scoring machinery:

* ``ruzhash`` -- each internal node holds a :class:`~prefspace.hashing.SplitRule`
  and sends a point to the group of its RuzHash bucket. No distances are
  computed.
* ``voronoi`` -- the PI-Forest baseline. Each internal node holds ``b`` centers
  drawn from its points and sends a point to the nearest one under a
  pluggable distance.

Trees stop at the first node with at most ``min_node_size`` points or at depth
``floor(log_b psi)`` (at least 1), so with ``psi = 256`` every tree with
``b >= 32`` has a single level. At test time the depth of the reached leaf is
increased by ``log_b(max(leaf_size, 1))`` to account for the points left
unseparated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .distances import DistanceKind, pairwise
from .hashing import SplitRule, make_split_rule, split_groups

RUZHASH = "ruzhash"
VORONOI = "voronoi"


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyper-parameters.

    Attributes
    ----------
    t : number of trees.
    psi : subsample size per tree (clamped to the dataset size).
    b : branching factor.
    method : ``"ruzhash"`` or ``"voronoi"``.
    distance : distance used by ``voronoi`` nodes; ignored by ``ruzhash``.
    seed : root seed; tree ``i`` uses a generator derived from ``(seed, i)``.
    min_node_size : nodes with at most this many points become leaves.
    max_retries : fresh RuzHash rules tried after a split that sends every
        point to one group, before giving up and making a leaf.
    """

    t: int = 100
    psi: int = 256
    b: int = 2
    method: str = RUZHASH
    distance: Optional[DistanceKind] = None
    seed: int = 0
    min_node_size: int = 1
    max_retries: int = 8

    def __post_init__(self):
        if self.method not in (RUZHASH, VORONOI):
            raise ValueError(f"unknown method {self.method!r}")
        if self.t < 1:
            raise ValueError(f"t must be >= 1, got {self.t}")
        if self.psi < 2:
            raise ValueError(f"psi must be >= 2, got {self.psi}")
        if self.b < 2:
            raise ValueError(f"b must be >= 2, got {self.b}")
        if self.min_node_size < 1:
            raise ValueError(f"min_node_size must be >= 1, got {self.min_node_size}")
        if self.method == VORONOI:
            object.__setattr__(self, "distance", DistanceKind(self.distance or DistanceKind.TANIMOTO))


@dataclass(frozen=True)
class VoronoiRule:
    centers: np.ndarray
    kind: DistanceKind

    @property
    def b(self) -> int:
        return self.centers.shape[0]


@dataclass
class Leaf:
    size: int


@dataclass
class Internal:
    rule: Union[SplitRule, VoronoiRule]
    children: list


TreeNode = Union[Leaf, Internal]


@dataclass
class Counters:
    """Deterministic work counters.

    ``rule_evals`` counts RuzHash rule applications, one per point per
    internal node visited. ``distance_evals`` counts point-to-center distances.
    """

    rule_evals: int = 0
    distance_evals: int = 0

    def __iadd__(self, other: "Counters") -> "Counters":
        self.rule_evals += other.rule_evals
        self.distance_evals += other.distance_evals
        return self

    def as_dict(self) -> dict:
        return {"rule_evals": self.rule_evals, "distance_evals": self.distance_evals}


def max_depth(psi: int, b: int) -> int:
    """Largest ``d >= 1`` with ``b**d <= psi``: ``floor(log_b psi)`` in exact integers.

    A subsample of one point gets depth 0.
    """
    if psi < 2:
        return 0
    d, cap = 0, 1
    while cap * b <= psi:
        cap *= b
        d += 1
    return max(d, 1)


def average_path_length(psi: int, b: int) -> float:
    """Normalizer ``log_b psi`` of the anomaly score."""
    return math.log(psi) / math.log(b)


def voronoi_split(points, b: int, kind, rng: np.random.Generator, counters: Optional[Counters] = None):
    """Nearest-center partition of ``points`` around ``b`` distinct sampled rows.

    Returns ``(rule, groups)`` where ``groups[j]`` is the cell of row ``j``.
    Every cell is nonempty: each center is kept in its own cell even when an
    identical earlier center would win the lowest-index tie-break.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[0] < b:
        raise ValueError(f"need at least b={b} points, got {P.shape[0]}")
    idx = rng.choice(P.shape[0], size=b, replace=False)
    rule = VoronoiRule(centers=P[idx].copy(), kind=DistanceKind(kind))
    groups = nearest_center(P, rule)
    groups[idx] = np.arange(b)
    if counters is not None:
        counters.distance_evals += P.shape[0] * b
    return rule, groups


def nearest_center(P, rule: VoronoiRule) -> np.ndarray:
    # argmin returns the first minimum: ties go to the lowest center index
    return np.argmin(pairwise(rule.kind, P, rule.centers), axis=1)


def _route(P, rule) -> np.ndarray:
    if isinstance(rule, VoronoiRule):
        return nearest_center(P, rule)
    return split_groups(P, rule)


def build_tree(
    sub,
    cfg: ForestConfig,
    rng: np.random.Generator,
    depth_limit: Optional[int] = None,
    counters: Optional[Counters] = None,
) -> TreeNode:
    """Recursively split the subsample ``sub`` (rows are preference vectors)."""
    P = np.atleast_2d(np.asarray(sub, dtype=float))
    if P.shape[0] == 0 or P.size == 0:
        raise ValueError("cannot build a tree on an empty subsample")
    if depth_limit is None:
        depth_limit = max_depth(P.shape[0], cfg.b)
    if cfg.method == RUZHASH and cfg.b > P.shape[1]:
        raise ValueError(f"RuzHash needs b <= m, got b={cfg.b}, m={P.shape[1]}")
    counters = counters if counters is not None else Counters()
    return _grow(P, 0, depth_limit, cfg, rng, counters)


def _grow(P, depth, depth_limit, cfg, rng, counters) -> TreeNode:
    n = P.shape[0]
    if n <= cfg.min_node_size or depth >= depth_limit:
        return Leaf(n)
    if cfg.method == VORONOI:
        if n < cfg.b:
            return Leaf(n)
        rule, groups = voronoi_split(P, cfg.b, cfg.distance, rng, counters)
    else:
        for _ in range(cfg.max_retries + 1):
            rule = make_split_rule(P.shape[1], cfg.b, rng)
            groups = split_groups(P, rule)
            counters.rule_evals += n
            if np.unique(groups).size > 1:
                break
        else:
            return Leaf(n)
    children = [_grow(P[groups == g], depth + 1, depth_limit, cfg, rng, counters) for g in range(cfg.b)]
    return Internal(rule, children)


def tree_depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(c) for c in node.children)


def _leaf_adjustment(size: int, b: int) -> float:
    return math.log(max(size, 1)) / math.log(b)


def height(p, tree: TreeNode, b: int) -> float:
    """Depth of the leaf reached by ``p`` plus the leaf-size adjustment."""
    return float(tree_heights(np.asarray(p, dtype=float)[None, :], tree, b)[0])


def tree_heights(P, tree: TreeNode, b: int, counters: Optional[Counters] = None) -> np.ndarray:
    """Heights of every row of ``P`` in one tree, routing all rows together."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    out = np.empty(P.shape[0])
    counters = counters if counters is not None else Counters()
    _descend(tree, P, np.arange(P.shape[0]), 0, b, out, counters)
    return out


def _descend(node, P, rows, depth, b, out, counters):
    if isinstance(node, Leaf):
        out[rows] = depth + _leaf_adjustment(node.size, b)
        return
    groups = _route(P[rows], node.rule)
    if isinstance(node.rule, VoronoiRule):
        counters.distance_evals += rows.size * node.rule.b
    else:
        counters.rule_evals += rows.size
    for g, child in enumerate(node.children):
        sel = rows[groups == g]
        if sel.size:
            _descend(child, P, sel, depth + 1, b, out, counters)


def anomaly_score(h, psi: int, b: int) -> float:
    """``2 ** (-mean(h) / log_b(psi))``."""
    if psi < 2 or b < 2:
        raise ValueError(f"need psi >= 2 and b >= 2, got psi={psi}, b={b}")
    return float(2.0 ** (-np.mean(h) / average_path_length(psi, b)))


@dataclass
class Forest:
    cfg: ForestConfig
    psi: int
    trees: list = field(default_factory=list)
    train_counters: Counters = field(default_factory=Counters)

    @property
    def b(self) -> int:
        return self.cfg.b

    def heights(self, P, counters: Optional[Counters] = None) -> np.ndarray:
        """Height matrix of shape ``(n, t)``."""
        P = np.atleast_2d(np.asarray(P, dtype=float))
        return np.column_stack([tree_heights(P, tree, self.b, counters) for tree in self.trees])


def tree_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def build_forest(P, cfg: ForestConfig) -> Forest:
    """Train ``cfg.t`` trees, each on its own subsample drawn without replacement."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0]
    if n < 1:
        raise ValueError("cannot build a forest on an empty matrix")
    if cfg.method == RUZHASH and cfg.b > P.shape[1]:
        raise ValueError(f"RuzHash needs b <= m, got b={cfg.b}, m={P.shape[1]}")
    psi = min(cfg.psi, n)
    limit = max_depth(psi, cfg.b)
    forest = Forest(cfg=cfg, psi=psi)
    for k in range(cfg.t):
        rng = tree_rng(cfg.seed, k)
        idx = rng.choice(n, size=psi, replace=False)
        forest.trees.append(build_tree(P[idx], cfg, rng, depth_limit=limit, counters=forest.train_counters))
    return forest


def score_all(P, forest: Forest, counters: Optional[Counters] = None) -> np.ndarray:
    """Anomaly score of every row of ``P``; higher means more anomalous."""
    H = forest.heights(P, counters)
    if forest.psi < 2:
        # a single-point forest cannot separate anything
        return np.ones(H.shape[0])
    return 2.0 ** (-H.mean(axis=1) / average_path_length(forest.psi, forest.b))
