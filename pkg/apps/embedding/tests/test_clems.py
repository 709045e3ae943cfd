import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from apps.core.costs import CostSpec, Criterion
from apps.core.exceptions import DimensionError, NotEmbeddableError
from apps.core.labels import Dataset, LabelVector
from apps.embedding.clems import (
    CandidateSet,
    CsEmbedding,
    MdsOptions,
    build_candidate_set,
    build_mirrored_problem,
    fit_clems,
    fit_embedding,
)
from apps.forest.forest import ForestParams
from apps.mds.smacof import stress


def labels_dataset(Y, d=2, seed=0):
    Y = np.asarray(Y)
    X = np.random.default_rng(seed).normal(size=(Y.shape[0], d))
    return Dataset(X, Y, name='labels')


def random_candidates(rng, L, K):
    Y = rng.integers(0, 2, size=(4 * L, K))
    return build_candidate_set(labels_dataset(Y))


def two_candidate_embedding(freqs=(1, 1)):
    candidates = CandidateSet(np.array([[1, 0], [0, 1]]), np.array(freqs))
    return CsEmbedding(
        candidates=candidates,
        spec=CostSpec(Criterion.F1),
        truth_coords=np.array([[0.0], [1.0]]),
        pred_coords=np.array([[0.0], [1.0]]),
        stress=0.0,
    )


class CandidateSetTests(SimpleTestCase):

    def test_counts(self):
        candidates = build_candidate_set(labels_dataset([[1, 0], [1, 0], [0, 1]]))
        self.assertEqual(candidates.L, 2)
        freqs = {str(candidates.vector(i)): int(candidates.freqs[i]) for i in range(candidates.L)}
        self.assertEqual(freqs, {'10': 2, '01': 1})
        self.assertEqual(candidates.total, 3)

    def test_single_label_vector(self):
        candidates = build_candidate_set(labels_dataset([[1, 1, 0]] * 5))
        self.assertEqual(candidates.L, 1)
        self.assertEqual(candidates.freqs.tolist(), [5])

    def test_all_source_adds_extra_labels(self):
        train = labels_dataset([[1, 0], [1, 0]])
        test = labels_dataset([[0, 1], [1, 0]], seed=1)
        only_train = build_candidate_set(train, 'train', extra=test)
        everything = build_candidate_set(train, 'all', extra=test)
        self.assertEqual(only_train.L, 1)
        self.assertEqual(everything.L, 2)
        self.assertEqual(everything.total, 4)

    def test_lookup(self):
        candidates = build_candidate_set(labels_dataset([[1, 0], [0, 1]]))
        self.assertIn(LabelVector((0, 1)), candidates)
        self.assertNotIn((1, 1), candidates)
        with self.assertRaises(NotEmbeddableError):
            candidates.index_of((1, 1))

    def test_empty_dataset(self):
        with self.assertRaises(ValidationError):
            build_candidate_set(Dataset(np.zeros((0, 2)), np.zeros((0, 3))))


class MirroredProblemTests(SimpleTestCase):

    def test_structure_for_every_criterion(self):
        rng = np.random.default_rng(0)
        for trial in range(10):
            candidates = random_candidates(rng, L=int(rng.integers(2, 8)), K=int(rng.integers(2, 6)))
            L = candidates.L
            for criterion in Criterion:
                spec = CostSpec(criterion)
                problem = build_mirrored_problem(candidates, spec, 2)
                delta, weights = problem.dissimilarities, problem.weights
                with self.subTest(trial=trial, criterion=criterion):
                    np.testing.assert_array_equal(delta, delta.T)
                    np.testing.assert_array_equal(weights, weights.T)
                    for block in (delta[:L, :L], delta[L:, L:], weights[:L, :L], weights[L:, L:]):
                        self.assertFalse(block.any())
                    for i in range(L):
                        for j in range(L):
                            y_i, y_j = candidates.labels[i], candidates.labels[j]
                            self.assertEqual(delta[i, L + j], spec.delta(spec.cost(y_i, y_j)))
                            self.assertEqual(delta[L + i, j], spec.delta(spec.cost(y_j, y_i)))
                            self.assertEqual(weights[i, L + j], candidates.freqs[i])
                            self.assertEqual(weights[L + i, j], candidates.freqs[j])

    def test_f1_pair(self):
        candidates = CandidateSet(np.array([[1, 0], [0, 1]]), np.array([1, 1]))
        problem = build_mirrored_problem(candidates, CostSpec(Criterion.F1), 1)
        self.assertEqual(problem.dissimilarities[0, 3], 1.0)
        self.assertEqual(problem.dissimilarities[1, 2], 1.0)
        self.assertEqual(problem.dissimilarities[0, 2], 0.0)

    def test_rank_loss_blocks_use_opposite_argument_orders(self):
        candidates = CandidateSet(np.array([[1, 0], [1, 1]]), np.array([1, 1]))
        problem = build_mirrored_problem(candidates, CostSpec(Criterion.RANK_LOSS), 1)
        # c((1,0), (1,1)) = 0.5 but c((1,1), (1,0)) = 0
        self.assertAlmostEqual(problem.dissimilarities[0, 3], np.sqrt(0.5))
        self.assertEqual(problem.dissimilarities[1, 2], 0.0)
        self.assertAlmostEqual(problem.dissimilarities[3, 0], np.sqrt(0.5))

    def test_single_candidate_warns(self):
        candidates = CandidateSet(np.array([[1, 0]]), np.array([3]))
        with self.assertLogs('apps.embedding.clems', level='WARNING'):
            build_mirrored_problem(candidates, CostSpec(Criterion.F1), 1)


class FitEmbeddingTests(SimpleTestCase):

    def test_two_pair_geometry(self):
        candidates = CandidateSet(np.array([[1, 0], [0, 1]]), np.array([2, 1]))
        for M in (1, 2):
            embedding = fit_embedding(candidates, CostSpec(Criterion.F1), M, MdsOptions(tol=1e-12, max_iter=2000, n_init=8))
            t, p = embedding.truth_coords, embedding.pred_coords
            with self.subTest(M=M):
                self.assertLess(embedding.stress, 1e-6)
                self.assertAlmostEqual(np.linalg.norm(t[0] - p[1]), 1.0, delta=1e-3)
                self.assertAlmostEqual(np.linalg.norm(t[1] - p[0]), 1.0, delta=1e-3)

    def test_hamming_opposite_vectors(self):
        candidates = CandidateSet(np.array([[0, 0], [1, 1]]), np.array([1, 1]))
        embedding = fit_embedding(candidates, CostSpec(Criterion.HAMMING), 1, MdsOptions(tol=1e-12, max_iter=2000, n_init=8))
        self.assertLess(embedding.stress, 1e-6)
        self.assertAlmostEqual(np.linalg.norm(embedding.truth_coords[0] - embedding.pred_coords[1]), 1.0, delta=1e-3)
        self.assertGreater(np.linalg.norm(embedding.embed((0, 0)) - embedding.embed((1, 1))), 0.5)

    def test_reported_stress_matches_coordinates(self):
        candidates = random_candidates(np.random.default_rng(1), L=6, K=4)
        spec = CostSpec(Criterion.ACCURACY)
        embedding = fit_embedding(candidates, spec, 3, MdsOptions(seed=5))
        problem = build_mirrored_problem(candidates, spec, 3)
        X = np.vstack([embedding.truth_coords, embedding.pred_coords])
        self.assertAlmostEqual(stress(X, problem), embedding.stress, places=10)

    def test_embed(self):
        candidates = build_candidate_set(labels_dataset([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [0, 1, 1]]))
        embedding = fit_embedding(candidates, CostSpec(Criterion.F1), 2)
        for i in range(candidates.L):
            np.testing.assert_array_equal(embedding.embed(candidates.labels[i]), embedding.pred_coords[i])
        with self.assertRaises(NotEmbeddableError):
            embedding.embed((1, 1, 1))

    def test_deterministic(self):
        candidates = random_candidates(np.random.default_rng(3), L=6, K=4)
        a = fit_embedding(candidates, CostSpec(Criterion.RANK_LOSS), 2, MdsOptions(seed=9))
        b = fit_embedding(candidates, CostSpec(Criterion.RANK_LOSS), 2, MdsOptions(seed=9))
        np.testing.assert_array_equal(a.truth_coords, b.truth_coords)
        np.testing.assert_array_equal(a.pred_coords, b.pred_coords)

    def test_to_frame(self):
        embedding = two_candidate_embedding()
        frame = embedding.to_frame()
        self.assertEqual(list(frame.columns), ['role', 'candidate_index', 'frequency', 'z0'])
        self.assertEqual(frame['role'].tolist(), ['t', 't', 'p', 'p'])


class DecodeTests(SimpleTestCase):

    def test_exact_coordinate(self):
        embedding = two_candidate_embedding()
        label, index, distance = embedding.decode_nearest(np.array([1.0]))
        self.assertEqual((str(label), index, distance), ('01', 1, 0.0))

    def test_just_past_midpoint(self):
        embedding = two_candidate_embedding()
        self.assertEqual(embedding.decode_nearest(np.array([0.5 + 1e-9]))[1], 1)
        self.assertEqual(embedding.decode_nearest(np.array([0.5 - 1e-9]))[1], 0)

    def test_ties(self):
        self.assertEqual(two_candidate_embedding((1, 1)).decode_nearest(np.array([0.5]))[1], 0)
        self.assertEqual(two_candidate_embedding((1, 3)).decode_nearest(np.array([0.5]))[1], 1)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionError):
            two_candidate_embedding().decode_nearest(np.array([0.5, 0.5]))

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(4)
        candidates = random_candidates(rng, L=12, K=5)
        embedding = fit_embedding(candidates, CostSpec(Criterion.F1), 3, MdsOptions(seed=1))
        Z = rng.normal(scale=1.5, size=(10_000, 3))
        indices, distances = embedding.decode(Z)
        for z, index, distance in zip(Z, indices, distances):
            scan = [np.sqrt(np.sum((z - t) ** 2)) for t in embedding.truth_coords]
            self.assertEqual(index, int(np.argmin(scan)))
            self.assertAlmostEqual(distance, min(scan), places=12)
        self.assertTrue(np.all(indices < candidates.L))


class DecodingBoundTests(SimpleTestCase):

    def test_exact_truth_coordinate(self):
        embedding = two_candidate_embedding()
        bound = embedding.decoding_bound((1, 0), embedding.truth_coords[0])
        self.assertEqual(bound.lhs, 0.0)
        self.assertTrue(bound.holds)

    def test_just_past_midpoint(self):
        embedding = two_candidate_embedding()
        bound = embedding.decoding_bound((1, 0), np.array([0.5 + 1e-6]))
        self.assertEqual(bound.decoded_index, 1)
        self.assertEqual(bound.lhs, 1.0)
        self.assertTrue(bound.holds)
        self.assertTrue(bound.nearest_step_holds)

    def test_random_queries_on_fitted_fixtures(self):
        rng = np.random.default_rng(5)
        for criterion in (Criterion.HAMMING, Criterion.F1, Criterion.ACCURACY, Criterion.RANK_LOSS):
            candidates = random_candidates(rng, L=10, K=5)
            embedding = fit_embedding(candidates, CostSpec(criterion), 3, MdsOptions(seed=2))
            truths = rng.integers(0, candidates.L, size=10_000)
            Z = rng.normal(scale=2.0, size=(10_000, 3))
            for i, z_hat in zip(truths, Z):
                bound = embedding.decoding_bound(candidates.labels[i], z_hat)
                self.assertTrue(bound.holds, msg=f"{criterion} {bound}")
                self.assertTrue(bound.nearest_step_holds, msg=f"{criterion} {bound}")

    def test_outside_candidate_set(self):
        with self.assertRaises(NotEmbeddableError):
            two_candidate_embedding().decoding_bound((1, 1), np.array([0.0]))


class ConstantRegressor:

    def __init__(self, value):
        self.value = np.asarray(value, dtype=float)

    def predict(self, X):
        return np.tile(self.value, (np.atleast_2d(X).shape[0], 1))


class FitClemsTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(60, 4))
        Y = np.stack([X[:, 0] > 0, X[:, 1] > 0, (X[:, 0] + X[:, 2]) > 0.5], axis=1).astype(int)
        self.data = Dataset(X, Y, name='synthetic')

    def test_predictions_are_candidates(self):
        model = fit_clems(
            self.data, CostSpec(Criterion.F1), 3, seed=1,
            forest_params=ForestParams(n_trees=5, engine='native'),
        )
        preds = model.predict(self.data.X)
        self.assertEqual(preds.shape, self.data.Y.shape)
        for row in preds:
            self.assertIn(row, model.embedding.candidates)

    def test_seeded_fit_is_reproducible(self):
        params = ForestParams(n_trees=4, engine='native')
        a = fit_clems(self.data, CostSpec(Criterion.RANK_LOSS), 2, seed=3, forest_params=params)
        b = fit_clems(self.data, CostSpec(Criterion.RANK_LOSS), 2, seed=3, forest_params=params)
        np.testing.assert_array_equal(a.predict_embedded(self.data.X), b.predict_embedded(self.data.X))

    def test_regressor_factory_and_reused_embedding(self):
        first = fit_clems(self.data, CostSpec(Criterion.F1), 2, forest_params=ForestParams(n_trees=2))
        target = first.embedding.truth_coords[0]
        model = fit_clems(
            self.data, CostSpec(Criterion.F1), 2,
            embedding=first.embedding,
            regressor_factory=lambda X, T, seed: ConstantRegressor(target),
        )
        self.assertIs(model.embedding, first.embedding)
        preds = model.predict(self.data.X[:5])
        np.testing.assert_array_equal(preds, np.tile(first.embedding.candidates.labels[0], (5, 1)))
