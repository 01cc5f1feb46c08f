import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prefspace.distances import DistanceKind, pairwise
from prefspace.forest import (
    RUZHASH,
    VORONOI,
    Counters,
    ForestConfig,
    Internal,
    Leaf,
    VoronoiRule,
    anomaly_score,
    build_forest,
    build_tree,
    height,
    max_depth,
    nearest_center,
    score_all,
    tree_depth,
    tree_heights,
    voronoi_split,
)
from prefspace.hashing import make_split_rule


def leaves(node):
    if isinstance(node, Leaf):
        return [node]
    return [leaf for child in node.children for leaf in leaves(child)]


class TestConfig:
    @pytest.mark.parametrize("kw", [{"t": 0}, {"psi": 1}, {"b": 1}, {"method": "kd"}, {"min_node_size": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ForestConfig(**kw)

    def test_voronoi_default_distance(self):
        assert ForestConfig(method=VORONOI).distance is DistanceKind.TANIMOTO


class TestMaxDepth:
    @pytest.mark.parametrize(
        "psi,b,expected", [(256, 2, 8), (256, 4, 4), (256, 16, 2), (256, 32, 1), (256, 256, 1), (1, 2, 0), (3, 4, 1)]
    )
    def test_values(self, psi, b, expected):
        assert max_depth(psi, b) == expected

    @given(st.integers(2, 5000), st.integers(2, 300))
    def test_is_floor_log(self, psi, b):
        d = max_depth(psi, b)
        assert d >= 1
        if b <= psi:
            assert b**d <= psi < b ** (d + 1)


class TestBuildTree:
    def test_single_point(self):
        tree = build_tree(np.ones((1, 5)), ForestConfig(b=2), np.random.default_rng(0))
        assert tree == Leaf(1)
        assert height(np.ones(5), tree, 2) == 0

    def test_depth_limits(self, small_scene):
        _, P = small_scene
        rng = np.random.default_rng(0)
        sub = P[rng.choice(len(P), 128, replace=False)]
        for b in (2, 4, 128):
            tree = build_tree(sub, ForestConfig(b=b, psi=128), rng)
            assert tree_depth(tree) <= max_depth(128, b)
            assert sum(leaf.size for leaf in leaves(tree)) == 128

    def test_single_level_at_full_branching(self, small_scene):
        _, P = small_scene
        tree = build_tree(P[:150], ForestConfig(b=150, psi=150), np.random.default_rng(0))
        assert tree_depth(tree) == 1

    def test_identical_points_become_leaf(self):
        P = np.tile(np.array([0.2, 0.0, 0.7, 0.1]), (6, 1))
        tree = build_tree(P, ForestConfig(b=2), np.random.default_rng(0))
        assert tree == Leaf(6)

    def test_voronoi_children_nonempty(self, small_scene):
        _, P = small_scene
        tree = build_tree(P[:100], ForestConfig(b=4, psi=100, method=VORONOI), np.random.default_rng(2))

        def check(node):
            if isinstance(node, Internal):
                assert len(node.children) == 4
                assert all(
                    (c.size if isinstance(c, Leaf) else sum(l.size for l in leaves(c))) >= 1 for c in node.children
                )
                for c in node.children:
                    check(c)

        check(tree)


class TestHeight:
    def test_isolated_at_first_split(self):
        # two one-hot points on different dimensions, b = m: each lands alone at depth 1
        P = np.eye(3)[[0, 1]]
        cfg = ForestConfig(b=3, psi=2)
        tree = build_tree(P, cfg, np.random.default_rng(0))
        assert isinstance(tree, Internal)
        assert height(P[0], tree, 3) == 1
        assert height(P[1], tree, 3) == 1

    def test_leaf_adjustment(self):
        # a leaf holding b**d points reached at depth h' gives h' + d
        b, d, h_prime = 3, 2, 1
        rule = make_split_rule(2, 2, np.random.default_rng(0))
        tree = Internal(rule, [Leaf(b**d), Leaf(b**d)])
        assert height(np.array([0.5, 0.5]), tree, b) == pytest.approx(h_prime + d, abs=1e-12)

    def test_empty_leaf(self):
        rule = make_split_rule(2, 2, np.random.default_rng(0))
        tree = Internal(rule, [Leaf(0), Leaf(0)])
        assert height(np.array([0.5, 0.5]), tree, 2) == 1

    def test_deterministic(self, small_scene):
        _, P = small_scene
        tree = build_tree(P[:64], ForestConfig(b=2, psi=64), np.random.default_rng(1))
        first = tree_heights(P, tree, 2)
        np.testing.assert_array_equal(first, tree_heights(P, tree, 2))
        assert all(height(P[j], tree, 2) == first[j] for j in (0, 10, 50))


class TestAnomalyScore:
    def test_mean_equal_to_normalizer(self):
        assert anomaly_score([8.0] * 3, 256, 2) == pytest.approx(0.5)

    def test_zero_height(self):
        assert anomaly_score([0.0, 0.0], 256, 4) == 1.0

    def test_worked_example(self):
        c = math.log(256) / math.log(2)
        assert 2 ** (-16 / c) == 0.25
        assert anomaly_score([16.0, 16.0], 256, 2) == pytest.approx(0.25, abs=1e-15)

    @given(st.floats(0, 50), st.floats(0, 50))
    def test_strictly_decreasing(self, h1, h2):
        if h1 < h2 - 1e-9:
            assert anomaly_score([h1], 256, 4) > anomaly_score([h2], 256, 4)

    def test_invalid(self):
        with pytest.raises(ValueError):
            anomaly_score([1.0], 1, 2)


class TestForest:
    def test_tree_count_and_determinism(self, small_scene):
        _, P = small_scene
        cfg = ForestConfig(t=12, psi=64, b=4, seed=3)
        a, b = build_forest(P, cfg), build_forest(P, cfg)
        assert len(a.trees) == 12
        np.testing.assert_array_equal(score_all(P, a), score_all(P, b))

    def test_protocol_defaults(self):
        cfg = ForestConfig()
        assert (cfg.t, cfg.psi) == (100, 256)

    def test_psi_clamped(self, small_scene):
        _, P = small_scene
        forest = build_forest(P[:30], ForestConfig(t=2, psi=256, b=2))
        assert forest.psi == 30

    def test_single_tree_over_all_points(self, small_scene):
        _, P = small_scene
        forest = build_forest(P[:40], ForestConfig(t=1, psi=40, b=2))
        assert sum(leaf.size for leaf in leaves(forest.trees[0])) == 40

    def test_identical_points_equal_scores(self):
        P = np.tile(np.array([0.3, 0.9, 0.0]), (10, 1))
        scores = score_all(P, build_forest(P, ForestConfig(t=5, psi=8, b=2)))
        assert np.ptp(scores) == 0

    @pytest.mark.parametrize("method,distance", [(RUZHASH, None), (VORONOI, "tanimoto"), (VORONOI, "ruzicka")])
    def test_scores_in_range_and_anomalies_higher(self, small_scene, method, distance):
        data, P = small_scene
        cfg = ForestConfig(t=50, psi=128, b=4, method=method, distance=distance, seed=1)
        scores = score_all(P, build_forest(P, cfg))
        assert ((scores > 0) & (scores <= 1)).all()
        assert scores[data.is_anomaly].mean() > scores[~data.is_anomaly].mean()

    def test_ruzhash_b_larger_than_m(self):
        with pytest.raises(ValueError):
            build_forest(np.random.default_rng(0).random((10, 3)), ForestConfig(b=4))

    def test_isolated_point_has_short_paths(self):
        # one point whose support is disjoint from everyone else's
        rng = np.random.default_rng(0)
        for seed in range(5):
            P = np.zeros((65, 40))
            P[:64, :30] = rng.random((64, 30)) * (rng.random((64, 30)) > 0.3)
            P[64, 35:] = 0.9
            forest = build_forest(P, ForestConfig(t=30, psi=65, b=2, seed=seed))
            H = forest.heights(P)
            assert H[64].mean() < H.mean()


class TestCounters:
    def test_exact_test_time_counts(self, small_scene):
        _, P = small_scene
        n = len(P)
        for b in (2, 4, 16):
            forest = build_forest(P, ForestConfig(t=10, psi=128, b=b, seed=0))
            c = Counters()
            score_all(P, forest, c)
            assert c.distance_evals == 0
            assert c.rule_evals <= n * 10 * max_depth(128, b)

            vforest = build_forest(P, ForestConfig(t=10, psi=128, b=b, method=VORONOI, seed=0))
            v = Counters()
            score_all(P, vforest, v)
            assert v.rule_evals == 0
            assert n * 10 * b <= v.distance_evals <= n * 10 * b * max_depth(128, b)


class TestVoronoiSplit:
    def test_singletons(self):
        P = np.random.default_rng(0).random((5, 4))
        rule, groups = voronoi_split(P, 5, "ruzicka", np.random.default_rng(1))
        assert sorted(groups) == [0, 1, 2, 3, 4]

    def test_cluster_pure_cells(self):
        rng = np.random.default_rng(3)
        A = np.hstack([rng.uniform(0.5, 1, (10, 5)), np.zeros((10, 5))])
        B = np.hstack([np.zeros((10, 5)), rng.uniform(0.5, 1, (10, 5))])
        P = np.vstack([A, B])
        rule = VoronoiRule(centers=P[[0, 10]], kind=DistanceKind.RUZICKA)
        d = pairwise("ruzicka", P, rule.centers)
        # oracle: every point is closer to its own cluster's center
        assert (d[:10, 0] < d[:10, 1]).all() and (d[10:, 1] < d[10:, 0]).all()
        np.testing.assert_array_equal(nearest_center(P, rule), [0] * 10 + [1] * 10)

    def test_identical_points_tie_break(self):
        P = np.tile([0.4, 0.0, 0.6], (8, 1))
        _, groups = voronoi_split(P, 3, "tanimoto", np.random.default_rng(0))
        counts = np.bincount(groups, minlength=3)
        assert counts[0] == 6 and counts[1] == 1 and counts[2] == 1

    def test_needs_b_points(self):
        with pytest.raises(ValueError):
            voronoi_split(np.ones((2, 3)), 3, "jaccard", np.random.default_rng(0))
