import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from apps.core.exceptions import DimensionError
from apps.forest.forest import ForestModel, ForestParams, fit_forest
from apps.forest.tree import LEAF, RegressionTree, fit_tree, n_split_features


def separable():
    X = np.array([[0.0]] * 10 + [[1.0]] * 10)
    t = np.array([0.0] * 10 + [1.0] * 10)
    return X, t


EXACT = dict(n_trees=1, max_depth=None, min_leaf=1, max_features=None, bootstrap=False)


class FitTreeTests(SimpleTestCase):

    def test_constant_targets_give_single_leaf(self):
        X = np.random.default_rng(0).normal(size=(12, 3))
        tree = fit_tree(X, np.full(12, 2.5))
        self.assertEqual(tree.node_count, 1)
        self.assertTrue(tree.is_leaf())
        self.assertEqual(tree.value[0], 2.5)

    def test_depth_zero_is_mean(self):
        X, t = separable()
        tree = fit_tree(X, t, max_depth=0)
        self.assertEqual(tree.node_count, 1)
        self.assertEqual(tree.value[0], 0.5)

    def test_separable_fixture(self):
        X, t = separable()
        tree = fit_tree(X, t, max_depth=1)
        self.assertEqual(tree.node_count, 3)
        self.assertEqual(tree.feature[0], 0)
        self.assertEqual(tree.threshold[0], 0.5)
        self.assertEqual(tree.value[tree.left[0]], 0.0)
        self.assertEqual(tree.value[tree.right[0]], 1.0)
        np.testing.assert_allclose(tree.predict([[0.0], [1.0]]), [0.0, 1.0], atol=1e-9)

    def test_ties_prefer_lowest_feature(self):
        x = np.arange(6, dtype=np.float64)
        X = np.column_stack([x, x])
        t = (x >= 3).astype(np.float64)
        tree = fit_tree(X, t, max_depth=1)
        self.assertEqual(tree.feature[0], 0)
        self.assertEqual(tree.threshold[0], 2.5)

    def test_ties_prefer_lowest_threshold(self):
        # Splitting at 0.5 or 1.5 both leave a within-node SSE of 0.5.
        tree = fit_tree([[0.0], [1.0], [2.0]], [0.0, 1.0, 0.0], max_depth=1)
        self.assertEqual(tree.threshold[0], 0.5)

    def test_min_leaf_blocks_small_children(self):
        X, t = separable()
        tree = fit_tree(X, t, min_leaf=11)
        self.assertEqual(tree.node_count, 1)

    def test_unlimited_depth_reproduces_training_targets(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(60, 4))
        t = rng.normal(size=60)
        tree = fit_tree(X, t)
        np.testing.assert_array_equal(tree.predict(X), t)

    def test_depth_limit_respected(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(80, 3))
        tree = fit_tree(X, rng.normal(size=80), max_depth=3)
        self.assertLessEqual(tree.depth, 3)

    def test_empty_data(self):
        with self.assertRaises(ValidationError):
            fit_tree(np.zeros((0, 2)), np.zeros(0))

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            fit_tree(np.zeros((3, 2)), np.zeros(4))

    def test_predict_dimension_mismatch(self):
        X, t = separable()
        tree = fit_tree(X, t)
        with self.assertRaises(DimensionError):
            tree.predict([[0.0, 1.0]])

    def test_split_feature_counts(self):
        self.assertEqual(n_split_features(None, 9), 9)
        self.assertEqual(n_split_features(1 / 3, 9), 3)
        self.assertEqual(n_split_features(1 / 3, 2), 1)
        self.assertEqual(n_split_features(20, 9), 9)


class RegressionTreeTests(SimpleTestCase):

    def test_dict_roundtrip(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 3))
        tree = fit_tree(X, rng.normal(size=30), max_depth=4)
        restored = RegressionTree.from_dict(tree.to_dict(), tree.n_features)
        np.testing.assert_array_equal(restored.predict(X), tree.predict(X))

    def test_rejects_missing_child(self):
        with self.assertRaises(ValidationError):
            RegressionTree(feature=[0, LEAF], threshold=[0.5, 0.0], left=[1, LEAF],
                           right=[LEAF, LEAF], value=[0.0, 1.0], n_features=1)

    def test_rejects_out_of_range_feature(self):
        with self.assertRaises(ValidationError):
            RegressionTree(feature=[3, LEAF, LEAF], threshold=[0.5, 0.0, 0.0], left=[1, LEAF, LEAF],
                           right=[2, LEAF, LEAF], value=[0.0, 0.0, 1.0], n_features=2)

    def test_rejects_non_finite_leaf(self):
        with self.assertRaises(ValidationError):
            RegressionTree(feature=[LEAF], threshold=[0.0], left=[LEAF], right=[LEAF],
                           value=[np.nan], n_features=1)


class ForestTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(11)
        self.X = rng.normal(size=(50, 6))
        self.T = np.column_stack([self.X[:, 0] + rng.normal(scale=0.1, size=50), rng.uniform(-2, 3, size=50)])

    def test_single_tree_collapse(self):
        X, t = separable()
        forest = fit_forest(X, t, ForestParams(engine='native', **EXACT), seed=9)
        tree = fit_tree(X, t)
        self.assertEqual(forest.M, 1)
        for name in ('feature', 'threshold', 'left', 'right', 'value'):
            np.testing.assert_array_equal(getattr(forest.trees[0][0], name), getattr(tree, name))
        np.testing.assert_allclose(forest.predict([[0.0], [1.0]])[:, 0], [0.0, 1.0], atol=1e-9)

    def test_sklearn_engine_on_separable_fixture(self):
        X, t = separable()
        forest = fit_forest(X, t, ForestParams(engine='sklearn', **EXACT), seed=0)
        np.testing.assert_allclose(forest.predict([[0.0], [1.0]])[:, 0], [0.0, 1.0], atol=1e-9)

    def test_engines_differ_only_in_tie_breaking(self):
        x = np.arange(6, dtype=np.float64)
        X = np.column_stack([x, x])
        t = (x >= 3).astype(np.float64)
        native = fit_forest(X, t, ForestParams(engine='native', **EXACT), seed=1)
        learned = fit_forest(X, t, ForestParams(engine='sklearn', **EXACT), seed=1)
        self.assertEqual(native.trees[0][0].feature[0], 0)
        self.assertIn(learned.trees[0][0].feature[0], (0, 1))
        self.assertAlmostEqual(learned.trees[0][0].threshold[0], 2.5, places=6)
        np.testing.assert_allclose(learned.predict(X), native.predict(X), atol=1e-12)

    def test_same_seed_is_bitwise_identical(self):
        for engine in ('native', 'sklearn'):
            with self.subTest(engine=engine):
                params = ForestParams(n_trees=5, max_depth=4, engine=engine)
                a = fit_forest(self.X, self.T, params, seed=21).predict(self.X)
                b = fit_forest(self.X, self.T, params, seed=21).predict(self.X)
                np.testing.assert_array_equal(a, b)

    def test_thread_count_does_not_change_forest(self):
        serial = ForestParams(n_trees=6, max_depth=5, engine='native', n_jobs=1)
        threaded = ForestParams(n_trees=6, max_depth=5, engine='native', n_jobs=3)
        np.testing.assert_array_equal(
            fit_forest(self.X, self.T, serial, seed=2).predict(self.X),
            fit_forest(self.X, self.T, threaded, seed=2).predict(self.X),
        )

    def test_predictions_within_target_range(self):
        params = ForestParams(n_trees=8, max_depth=3, engine='native')
        forest = fit_forest(self.X, self.T, params, seed=4)
        queries = np.random.default_rng(0).normal(scale=5.0, size=(200, 6))
        pred = forest.predict(queries)
        self.assertEqual(pred.shape, (200, 2))
        self.assertTrue((pred >= self.T.min(axis=0) - 1e-12).all())
        self.assertTrue((pred <= self.T.max(axis=0) + 1e-12).all())

    def test_constant_targets(self):
        params = ForestParams(n_trees=3, engine='native')
        forest = fit_forest(self.X, np.full((50, 2), -1.25), params)
        np.testing.assert_array_equal(forest.predict(self.X[:4]), np.full((4, 2), -1.25))

    def test_every_target_has_n_trees(self):
        forest = fit_forest(self.X, self.T, ForestParams(n_trees=4, max_depth=2, engine='native'))
        self.assertEqual([len(trees) for trees in forest.trees], [4, 4])
        with self.assertRaises(ValidationError):
            ForestModel(params=ForestParams(n_trees=2), trees=(forest.trees[0],), n_features=6)

    def test_shape_mismatch(self):
        with self.assertRaises(DimensionError):
            fit_forest(self.X, self.T[:10], ForestParams(n_trees=1))
        forest = fit_forest(self.X, self.T, ForestParams(n_trees=1, max_depth=1, engine='native'))
        with self.assertRaises(DimensionError):
            forest.predict(np.zeros((2, 5)))

    def test_params_validation(self):
        for bad in (dict(n_trees=0), dict(max_depth=-1), dict(min_leaf=0),
                    dict(max_features=1.5), dict(engine='xgboost')):
            with self.subTest(**bad):
                with self.assertRaises(ValidationError):
                    ForestParams(**bad)

    def test_with_depth_and_to_dict(self):
        params = ForestParams(n_jobs=4).with_depth(15)
        self.assertEqual(params.max_depth, 15)
        self.assertNotIn('n_jobs', params.to_dict())
        self.assertEqual(ForestParams(**params.to_dict()).max_depth, 15)
