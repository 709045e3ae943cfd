"""
Arguments and helpers shared by the experiment commands.
"""
from __future__ import annotations

import argparse

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.core.costs import Criterion
from apps.core.labels import Dataset
from apps.core.exceptions import UnreadableInputError
from apps.core.mixins import USAGE_ERROR, CommandErrorsMixin
from apps.datasets.loaders import load_dataset
from apps.embedding.clems import CANDIDATE_SOURCES, MdsOptions
from apps.forest.forest import ENGINES, ForestParams

from ...harness import ALGORITHMS


def depth_list(value: str) -> list[int]:
    try:
        depths = [int(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid depth list {value!r}") from None
    if not depths:
        raise argparse.ArgumentTypeError("depth list is empty")
    return depths


def max_features(value: str) -> float | int | None:
    if value.lower() in ('none', 'all'):
        return None
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid max-features {value!r}") from None


class ExperimentCommand(CommandErrorsMixin, BaseCommand):
    """Base class of ``train``, ``predict``, ``eval``, ``experiment`` and ``dump_embedding``."""

    def add_data_arguments(self, parser, required: bool = True) -> None:
        parser.add_argument(
            '--data',
            required=required,
            help=f'Dataset: a .arff file (with sibling .xml), a .csv file, or a name under {settings.CLEMS_DATA_DIR}'
        )
        parser.add_argument(
            '--K',
            type=int,
            dest='n_labels',
            help='Number of trailing label columns when --data is a CSV file'
        )

    def add_model_arguments(self, parser, seed_required: bool = False) -> None:
        parser.add_argument(
            '--criterion',
            choices=Criterion.values,
            default=Criterion.F1.value,
            help='Target cost criterion'
        )
        parser.add_argument(
            '--algo',
            choices=ALGORITHMS,
            default='clems',
            help='Algorithm to fit'
        )
        parser.add_argument(
            '--candidates',
            default=settings.CLEMS_CANDIDATE_SOURCE,
            help=f'Candidate set source: {" or ".join(CANDIDATE_SOURCES)}'
        )
        parser.add_argument(
            '--seed',
            type=int,
            required=seed_required,
            default=None if seed_required else 0,
            help='Master seed'
        )
        parser.add_argument('--n-trees', type=int, default=settings.CLEMS_N_TREES)
        parser.add_argument('--min-leaf', type=int, default=settings.CLEMS_MIN_LEAF)
        parser.add_argument('--max-features', type=max_features, default=settings.CLEMS_MAX_FEATURES)
        parser.add_argument('--engine', choices=ENGINES, default=settings.CLEMS_FOREST_ENGINE)
        parser.add_argument('--mds-tol', type=float, default=settings.CLEMS_MDS_TOL)
        parser.add_argument('--mds-max-iter', type=int, default=settings.CLEMS_MDS_MAX_ITER)
        parser.add_argument('--mds-n-init', type=int, default=settings.CLEMS_MDS_N_INIT)
        parser.add_argument(
            '--jobs',
            type=int,
            default=settings.CLEMS_N_JOBS,
            help='Parallel workers'
        )

    def forest_params(self, options, depth: int | None = None) -> ForestParams:
        return ForestParams(
            n_trees=options['n_trees'],
            max_depth=depth,
            min_leaf=options['min_leaf'],
            max_features=options['max_features'],
            engine=options['engine'],
        )

    def mds_options(self, options) -> MdsOptions:
        return MdsOptions(
            tol=options['mds_tol'],
            max_iter=options['mds_max_iter'],
            n_init=options['mds_n_init'],
        )

    def load_data(self, options) -> Dataset:
        source = options.get('data')
        if not source:
            raise CommandError("error[usage]: --data is required", returncode=USAGE_ERROR)
        try:
            return load_dataset(source, settings.CLEMS_DATA_DIR, K=options.get('n_labels'))
        except FileNotFoundError as exc:
            raise CommandError(f"error[usage]: --data {source}: {exc}", returncode=USAGE_ERROR) from exc

    def read_label_csv(self, path) -> np.ndarray:
        try:
            frame = pd.read_csv(path)
        except FileNotFoundError:
            raise
        except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
            raise UnreadableInputError(f"Cannot read label CSV {path}: {exc}") from exc
        values = frame.to_numpy()
        if not np.isin(values, (0, 1)).all():
            raise CommandError(f"error[ValidationError]: {path} must hold only 0/1 labels")
        return values.astype(np.int8)

    def write_label_csv(self, Y, path, label_names=()) -> None:
        columns = list(label_names) or [f"label_{k}" for k in range(Y.shape[1])]
        pd.DataFrame(np.asarray(Y, dtype=np.int8), columns=columns).to_csv(path, index=False)
