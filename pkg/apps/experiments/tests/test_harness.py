import json
import math
import shutil
import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from apps.core.costs import Criterion
from apps.core.exceptions import DimensionError
from apps.core.labels import Dataset
from apps.embedding.clems import MdsOptions
from apps.experiments.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    evaluate,
    fit_model,
    reference_block,
    resolve_embed_dim,
    run_experiment,
    select_depth,
    split_dataset,
    summarize,
    write_results,
)
from apps.forest.forest import ForestParams

QUICK_FOREST = ForestParams(n_trees=2, max_features=None, engine='native')
QUICK_MDS = MdsOptions(max_iter=100)


def synthetic(N=24, d=3, K=3, seed=0, name='synthetic'):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(N, d))
    Y = (X[:, :K] + rng.normal(scale=0.5, size=(N, K)) > 0).astype(np.int8)
    return Dataset(X, Y, name=name)


def quick_config(**overrides):
    options = dict(
        dataset='synthetic', criterion=Criterion.F1, depth_grid=(1, 2),
        forest=QUICK_FOREST, mds=QUICK_MDS, n_runs=2, seed=7,
    )
    options.update(overrides)
    return ExperimentConfig(**options)


class FixedModel:

    def __init__(self, preds):
        self.preds = np.asarray(preds)

    def predict(self, X):
        return self.preds


class ResolveEmbedDimTests(SimpleTestCase):

    def test_percentages_round_up(self):
        self.assertEqual(resolve_embed_dim('100%', 6), 6)
        self.assertEqual(resolve_embed_dim('25%', 6), 2)
        self.assertEqual(resolve_embed_dim('50%', 45), 23)
        self.assertEqual(resolve_embed_dim('10%', 6), 1)
        self.assertEqual(resolve_embed_dim('12.5%', 8), 1)

    def test_absolute_counts(self):
        self.assertEqual(resolve_embed_dim('3', 6), 3)
        self.assertEqual(resolve_embed_dim(12, 6), 12)

    def test_invalid_values(self):
        for value in ('0', '-2', 'abc', '0%', '-5%', '%'):
            with self.subTest(value=value):
                with self.assertRaises(ValidationError):
                    resolve_embed_dim(value, 6)


class ExperimentConfigTests(SimpleTestCase):

    def test_normalizes_fields(self):
        config = quick_config(criterion='rank_loss', depth_grid=(10, 5, 10), embed_dim=3)
        self.assertIs(config.criterion, Criterion.RANK_LOSS)
        self.assertEqual(config.depth_grid, (5, 10))
        self.assertEqual(config.embed_dim, '3')

    def test_invalid_fields_are_collected(self):
        with self.assertRaises(ValidationError) as ctx:
            quick_config(algo='svm', criterion='precision', depth_grid=(0, 5), n_runs=0)
        self.assertEqual(
            set(ctx.exception.message_dict),
            {'algo', 'criterion', 'depth_grid', 'n_runs'},
        )

    def test_label(self):
        self.assertEqual(quick_config().label, 'clems')
        self.assertEqual(quick_config(candidates='all').label, 'clems-all')
        self.assertEqual(quick_config(algo='plst', candidates='all').label, 'plst')

    @override_settings(CLEMS_N_RUNS=3, CLEMS_N_TREES=7, CLEMS_EMBED_DIM='50%')
    def test_from_settings(self):
        config = ExperimentConfig.from_settings('emotions', 'accuracy', seed=4, n_runs=None)
        self.assertEqual(config.n_runs, 3)
        self.assertEqual(config.forest.n_trees, 7)
        self.assertEqual(config.embed_dim, '50%')
        self.assertEqual(config.seed, 4)

    def test_to_dict_is_json(self):
        document = json.loads(json.dumps(quick_config().to_dict()))
        self.assertEqual(document['criterion'], 'f1')
        self.assertEqual(document['depth_grid'], [1, 2])


class SplitTests(SimpleTestCase):

    def test_sizes(self):
        for N, sizes in ((8, (4, 2, 2)), (10, (5, 3, 2)), (5, (3, 2, 0)), (4, (2, 1, 1))):
            with self.subTest(N=N):
                parts = split_dataset(synthetic(N=N), seed=1)
                self.assertEqual(tuple(part.N for part in parts), sizes)

    def test_parts_partition_the_data(self):
        data = Dataset(np.arange(20, dtype=float)[:, None], np.zeros((20, 1), dtype=np.int8), name='ids')
        train, validation, test = split_dataset(data, seed=3)
        ids = np.concatenate([train.X[:, 0], validation.X[:, 0], test.X[:, 0]])
        self.assertEqual(sorted(ids.tolist()), list(range(20)))
        self.assertEqual(train.name, 'ids:train')

    def test_deterministic(self):
        data = synthetic(N=16)
        a = split_dataset(data, seed=5)
        b = split_dataset(data, seed=5)
        c = split_dataset(data, seed=6)
        for left, right in zip(a, b):
            np.testing.assert_array_equal(left.X, right.X)
        self.assertFalse(np.array_equal(a[0].X, c[0].X))

    def test_too_small(self):
        with self.assertRaises(ValidationError):
            split_dataset(synthetic(N=3), seed=0)


class EvaluateTests(SimpleTestCase):

    def test_perfect_predictions(self):
        Y = np.array([[1, 0, 1], [0, 1, 0]])
        self.assertEqual(evaluate(Y, Y, Criterion.F1), 1.0)
        self.assertEqual(evaluate(Y, Y, Criterion.HAMMING), 0.0)

    def test_half_wrong_hamming(self):
        truth = [[1, 0], [0, 1]]
        preds = [[1, 1], [0, 0]]
        self.assertEqual(evaluate(truth, preds, Criterion.HAMMING), 0.5)

    def test_length_mismatch(self):
        with self.assertRaises(DimensionError):
            evaluate([[1, 0]], [[1, 0], [0, 1]], Criterion.F1)

    def test_empty(self):
        with self.assertRaises(ValidationError):
            evaluate([], [], Criterion.F1)


class SelectDepthTests(SimpleTestCase):

    def setUp(self):
        self.train = synthetic(N=8)
        Y = np.array([[1, 0, 1], [0, 1, 0], [1, 1, 0], [0, 0, 1]], dtype=np.int8)
        self.validation = Dataset(np.zeros((4, 3)), Y, name='validation')
        self.wrong = 1 - self.validation.Y

    def select(self, by_depth, **overrides):
        config = quick_config(depth_grid=tuple(by_depth), **overrides)
        fake = lambda config, train, M, depth, seed, embedding=None, extra=None: FixedModel(by_depth[depth])  # noqa: E731
        with mock.patch('apps.experiments.harness.fit_model', side_effect=fake):
            return select_depth(self.train, self.validation, config, M=2)

    def test_single_depth(self):
        depth, scores = self.select({15: self.wrong})
        self.assertEqual(depth, 15)
        self.assertEqual(list(scores), [15])

    def test_dominating_depth_wins(self):
        depth, scores = self.select({5: self.wrong, 10: self.validation.Y, 15: self.wrong})
        self.assertEqual(depth, 10)
        self.assertEqual(scores[10], 1.0)

    def test_ties_go_to_smaller_depth(self):
        depth, _ = self.select({20: self.validation.Y, 5: self.validation.Y, 35: self.wrong})
        self.assertEqual(depth, 5)

    def test_loss_criterion_is_minimized(self):
        depth, scores = self.select({5: self.wrong, 10: self.validation.Y}, criterion=Criterion.RANK_LOSS)
        self.assertEqual(depth, 10)
        self.assertEqual(scores[10], 0.0)



def xor_dataset(repeat, name):
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * repeat)
    Y = np.column_stack([X[:, 0] != X[:, 1], X[:, 0]]).astype(np.int8)
    return Dataset(X, Y, name=name)


class SelectDepthOnRealModelsTests(SimpleTestCase):
    """The first label is an XOR of both features: one split cannot fit it, two can."""

    def setUp(self):
        self.config = quick_config(
            algo='br', criterion=Criterion.HAMMING, depth_grid=(1, 2, 3),
            forest=ForestParams(n_trees=1, max_features=None, bootstrap=False, engine='native'),
        )
        self.train = xor_dataset(5, 'train')
        self.validation = xor_dataset(1, 'validation')
        self.test = xor_dataset(3, 'test')

    def test_deeper_tree_selected(self):
        depth, scores = select_depth(self.train, self.validation, self.config, seed=3)
        self.assertIn(depth, self.config.depth_grid)
        self.assertEqual(depth, 2)
        self.assertEqual(scores[1], 0.25)
        self.assertEqual(scores[2], 0.0)

    def test_selected_depth_beats_stump_on_held_out_split(self):
        depth, _ = select_depth(self.train, self.validation, self.config, seed=3)
        selected = fit_model(self.config, self.train, 2, depth, 3)
        stump = fit_model(self.config, self.train, 2, 1, 3)
        self.assertLess(
            evaluate(self.test.Y, selected.predict(self.test.X), Criterion.HAMMING),
            evaluate(self.test.Y, stump.predict(self.test.X), Criterion.HAMMING),
        )

class SummarizeTests(SimpleTestCase):

    def test_single_run(self):
        self.assertEqual(summarize([0.5]), {'mean': 0.5, 'std': 0.0, 'ci95': 0.0})

    def test_several_runs(self):
        summary = summarize([1.0, 2.0, 3.0])
        self.assertEqual(summary['mean'], 2.0)
        self.assertEqual(summary['std'], 1.0)
        self.assertAlmostEqual(summary['ci95'], 1.96 / math.sqrt(3))


class ReferenceBlockTests(SimpleTestCase):

    def test_clems_gap_at_full_dimension(self):
        summary = {c: {'mean': 0.7} for c in ('f1', 'accuracy', 'rank_loss', 'hamming')}
        block = reference_block(quick_config(), 'emotions', K=6, M=6, summary=summary)
        self.assertEqual(set(block), {'f1', 'accuracy', 'rank_loss'})
        self.assertAlmostEqual(block['f1']['gap_to_clems'], 0.7 - block['f1']['clems'])

    def test_only_full_dimension_is_compared(self):
        self.assertEqual(reference_block(quick_config(), 'emotions', K=6, M=3, summary={}), {})
        self.assertEqual(reference_block(quick_config(), 'unknown', K=6, M=6, summary={}), {})

    def test_baselines_have_no_gap(self):
        summary = {c: {'mean': 0.7} for c in ('f1', 'accuracy', 'rank_loss')}
        block = reference_block(quick_config(algo='br'), 'scene', K=6, M=6, summary=summary)
        self.assertNotIn('gap_to_clems', block['f1'])


class RunExperimentTests(SimpleTestCase):

    def setUp(self):
        self.data = synthetic()
        self.tmp = Path(tempfile.mkdtemp())
        self.addCleanup(shutil.rmtree, self.tmp, ignore_errors=True)

    def test_deterministic_for_a_seed(self):
        a = run_experiment(quick_config(), self.data)
        b = run_experiment(quick_config(), self.data)
        self.assertEqual(a.summary, b.summary)
        self.assertEqual([r.metrics for r in a.runs], [r.metrics for r in b.runs])
        self.assertEqual([r.depth for r in a.runs], [r.depth for r in b.runs])

    def test_parallel_runs_match_serial(self):
        serial = run_experiment(quick_config(n_runs=3), self.data)
        parallel = run_experiment(quick_config(n_runs=3, n_jobs=3), self.data)
        self.assertEqual(serial.summary, parallel.summary)
        self.assertEqual([r.run for r in parallel.runs], [0, 1, 2])

    def test_result_contents(self):
        result = run_experiment(quick_config(embed_dim='50%'), self.data)
        self.assertEqual(result.M, 2)
        self.assertEqual(result.stem, 'synthetic_clems_f1_M2')
        self.assertEqual(set(result.summary), {'f1', 'accuracy', 'rank_loss', 'hamming'})
        for run in result.runs:
            self.assertIn(run.depth, (1, 2))
            self.assertEqual(set(run.validation), {1, 2})
            self.assertGreaterEqual(run.candidate_count, 1)
            self.assertIsNone(run.bound)
        self.assertIsNone(result.bound_totals)

    def test_bound_verification(self):
        result = run_experiment(quick_config(verify_bound=True), self.data)
        totals = result.bound_totals
        self.assertEqual(totals.violations, 0)
        self.assertEqual(totals.checked + totals.skipped, 6 * 2)

    def test_all_candidates(self):
        result = run_experiment(quick_config(candidates='all', verify_bound=True), self.data)
        self.assertEqual(result.config.label, 'clems-all')
        self.assertEqual(result.bound_totals.skipped, 0)

    def test_baseline_dimensions(self):
        br = run_experiment(quick_config(algo='br', embed_dim='1'), self.data)
        self.assertEqual(br.M, 3)
        self.assertIsNone(br.runs[0].candidate_count)
        with self.assertLogs('apps.experiments.harness', 'WARNING'):
            plst = run_experiment(quick_config(algo='plst', embed_dim='200%'), self.data)
        self.assertEqual(plst.M, 3)

    def test_write_results(self):
        results = [
            run_experiment(quick_config(), self.data),
            run_experiment(quick_config(algo='br'), self.data),
        ]
        paths = write_results(results, self.tmp / 'out')
        self.assertEqual(
            [p.name for p in paths],
            ['synthetic_clems_f1_M3.json', 'synthetic_br_f1_M3.json', 'synthetic_f1_runs.csv'],
        )
        document = json.loads(paths[0].read_text())
        self.assertEqual(document['schema_version'], 1)
        self.assertEqual(document['algo'], 'clems')
        self.assertEqual(len(document['runs']), 2)
        frame = pd.read_csv(paths[-1])
        self.assertEqual(list(frame.columns), CSV_COLUMNS)
        self.assertEqual(len(frame), 2 * 2 * 4)
        self.assertEqual(sorted(frame['algo'].unique()), ['br', 'clems'])
