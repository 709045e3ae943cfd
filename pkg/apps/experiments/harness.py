"""
Experiment protocol.

Every run splits the data 50/25/25 into train, validation and test with a
seed derived from (master seed, run), picks the tree depth on the validation
split for the target criterion, retrains on train and reports every
criterion on the test split. Runs are independent and aggregate the same
whether they execute serially or in parallel.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.exceptions import ValidationError
from joblib import Parallel, delayed

from apps.baselines.br import fit_br
from apps.baselines.plst import fit_plst
from apps.core.costs import REPORTED_CRITERIA, CostSpec, Criterion, criterion_values
from apps.core.exceptions import DimensionError
from apps.core.labels import Dataset, as_label_matrix
from apps.core.seeding import derive_seed, make_rng
from apps.embedding.clems import (
    CANDIDATE_SOURCES,
    CsEmbedding,
    MdsOptions,
    build_candidate_set,
    fit_clems,
    fit_embedding,
)
from apps.forest.forest import ForestParams

from .reference import reference_for

logger = logging.getLogger(__name__)

ALGORITHMS = ('clems', 'plst', 'br')
DEFAULT_DEPTH_GRID = (5, 10, 15, 20, 25, 30, 35)
Z_95 = 1.96
RESULTS_SCHEMA_VERSION = 1
CSV_COLUMNS = ['dataset', 'algo', 'criterion', 'M', 'run', 'value', 'depth', 'seed', 'wall_time_ms']

_SPLIT_STREAM = 0
_MODEL_STREAM = 1


def resolve_embed_dim(value, K: int) -> int:
    """
    Embedding dimension from an absolute count or a percentage of K.

    Percentages round up and never go below 1: ``'25%'`` of K=6 is 2.
    """
    text = str(value).strip()
    try:
        if text.endswith('%'):
            percent = Fraction(text[:-1].strip())
            if percent <= 0:
                raise ValidationError(f"Embedding dimension percentage must be positive, got {text}")
            return max(1, math.ceil(percent * K / 100))
        M = int(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"Invalid embedding dimension {value!r}; use an integer or a percentage like 100%") from None
    if M < 1:
        raise ValidationError(f"Embedding dimension must be >= 1, got {M}")
    return M


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs of one experiment: a dataset, a target criterion and one algorithm setting."""

    dataset: str
    criterion: Criterion
    algo: str = 'clems'
    embed_dim: str = '100%'
    candidates: str = 'train'
    depth_grid: tuple[int, ...] = DEFAULT_DEPTH_GRID
    forest: ForestParams = field(default_factory=ForestParams)
    mds: MdsOptions = field(default_factory=MdsOptions)
    n_runs: int = 20
    seed: int = 0
    verify_bound: bool = False
    n_jobs: int = 1

    def __post_init__(self) -> None:
        errors = {}
        try:
            object.__setattr__(self, 'criterion', Criterion(self.criterion))
        except ValueError:
            errors['criterion'] = f"Unknown criterion {self.criterion!r}; choose from {', '.join(Criterion.values)}"
        if self.algo not in ALGORITHMS:
            errors['algo'] = f"Unknown algorithm {self.algo!r}; choose from {', '.join(ALGORITHMS)}"
        if self.candidates not in CANDIDATE_SOURCES:
            errors['candidates'] = f"Unknown candidate source {self.candidates!r}"
        grid = tuple(sorted({int(d) for d in self.depth_grid}))
        if not grid:
            errors['depth_grid'] = "Depth grid must not be empty"
        elif grid[0] < 1:
            errors['depth_grid'] = f"Depths must be >= 1, got {grid[0]}"
        if self.n_runs < 1:
            errors['n_runs'] = f"n_runs must be >= 1, got {self.n_runs}"
        if errors:
            raise ValidationError(errors)
        object.__setattr__(self, 'depth_grid', grid)
        object.__setattr__(self, 'embed_dim', str(self.embed_dim))

    @classmethod
    def from_settings(cls, dataset: str, criterion, **overrides) -> ExperimentConfig:
        """A config with every unspecified knob taken from the ``CLEMS_*`` settings."""
        forest = ForestParams(
            n_trees=settings.CLEMS_N_TREES,
            min_leaf=settings.CLEMS_MIN_LEAF,
            max_features=settings.CLEMS_MAX_FEATURES,
            engine=settings.CLEMS_FOREST_ENGINE,
        )
        mds = MdsOptions(
            tol=settings.CLEMS_MDS_TOL,
            max_iter=settings.CLEMS_MDS_MAX_ITER,
            n_init=settings.CLEMS_MDS_N_INIT,
        )
        defaults = {
            'embed_dim': settings.CLEMS_EMBED_DIM,
            'candidates': settings.CLEMS_CANDIDATE_SOURCE,
            'depth_grid': tuple(settings.CLEMS_DEPTH_GRID),
            'forest': forest,
            'mds': mds,
            'n_runs': settings.CLEMS_N_RUNS,
            'n_jobs': settings.CLEMS_N_JOBS,
        }
        defaults.update({key: value for key, value in overrides.items() if value is not None})
        return cls(dataset=dataset, criterion=criterion, **defaults)

    @property
    def spec(self) -> CostSpec:
        return CostSpec(self.criterion)

    @property
    def label(self) -> str:
        """Algorithm name as reported, e.g. ``clems`` or ``clems-all``."""
        if self.algo == 'clems' and self.candidates != 'train':
            return f"clems-{self.candidates}"
        return self.algo

    def to_dict(self) -> dict:
        return {
            'dataset': self.dataset,
            'criterion': self.criterion.value,
            'algo': self.algo,
            'embed_dim': self.embed_dim,
            'candidates': self.candidates,
            'depth_grid': list(self.depth_grid),
            'forest': self.forest.to_dict(),
            'mds': asdict(self.mds),
            'n_runs': self.n_runs,
            'seed': self.seed,
            'verify_bound': self.verify_bound,
        }


def split_dataset(data: Dataset, seed: int) -> tuple[Dataset, Dataset, Dataset]:
    """Shuffle and cut into ⌈N/2⌉ train, ⌈N/4⌉ validation and the remaining test rows."""
    if data.N < 4:
        raise ValidationError(f"Need at least 4 instances to split, got {data.N}")
    order = make_rng(seed, _SPLIT_STREAM).permutation(data.N)
    n_train = math.ceil(data.N / 2)
    n_val = math.ceil(data.N / 4)
    return (
        data.subset(order[:n_train], name=f"{data.name}:train"),
        data.subset(order[n_train:n_train + n_val], name=f"{data.name}:validation"),
        data.subset(order[n_train + n_val:], name=f"{data.name}:test"),
    )


def evaluate(truth, preds, criterion) -> float:
    """Mean per-instance criterion value of ``preds`` against ``truth``."""
    T = as_label_matrix(truth)
    P = as_label_matrix(preds)
    if T.shape[0] != P.shape[0]:
        raise DimensionError(f"{T.shape[0]} truth vectors for {P.shape[0]} predictions")
    if T.shape[0] == 0:
        raise ValidationError("Cannot evaluate an empty prediction set")
    return float(criterion_values(T, P, criterion).mean())


def fit_model(config: ExperimentConfig, train: Dataset, M: int, depth: int | None, seed: int,
              embedding: CsEmbedding | None = None, extra: Dataset | None = None):
    """Fit the configured algorithm with the given tree depth."""
    params = config.forest.with_depth(depth)
    if config.algo == 'clems':
        return fit_clems(
            train, config.spec, M, seed,
            forest_params=params,
            source=config.candidates,
            extra=extra,
            mds_options=config.mds,
            embedding=embedding,
        )
    if config.algo == 'plst':
        return fit_plst(train, M, forest_params=params, seed=seed)
    return fit_br(train, forest_params=params, seed=seed)


def select_depth(train: Dataset, validation: Dataset, config: ExperimentConfig, *,
                 M: int = 1, seed: int = 0, embedding: CsEmbedding | None = None) -> tuple[int, dict[int, float]]:
    """
    Best tree depth on the validation split for the target criterion.

    Depths are tried in increasing order and only a strictly better value
    replaces the incumbent, so ties go to the smaller depth.
    """
    spec = config.spec
    best_depth, best_value = None, None
    scores: dict[int, float] = {}
    for depth in config.depth_grid:
        model = fit_model(config, train, M, depth, seed, embedding=embedding)
        value = evaluate(validation.Y, model.predict(validation.X), config.criterion)
        scores[depth] = value
        logger.debug(f"depth={depth}: validation {config.criterion.value}={value:.6g}")
        if best_value is None or spec.better(value, best_value):
            best_depth, best_value = depth, value
    return best_depth, scores


@dataclass
class BoundCheck:
    """Counters of the decoding-bound diagnostic over one test split."""

    checked: int = 0
    violations: int = 0
    nearest_violations: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def check_bound(model, test: Dataset) -> BoundCheck:
    embedding = model.embedding
    Z_hat = model.predict_embedded(test.X)
    result = BoundCheck()
    for y, z_hat in zip(test.Y, Z_hat):
        if y not in embedding.candidates:
            result.skipped += 1
            continue
        bound = embedding.decoding_bound(y, z_hat)
        result.checked += 1
        result.violations += not bound.holds
        result.nearest_violations += not bound.nearest_step_holds
    if result.skipped:
        logger.warning(f"{result.skipped} test label vectors are outside the candidate set; bound not checked for them")
    return result


@dataclass
class RunResult:
    run: int
    seed: int
    depth: int
    M: int
    metrics: dict[str, float]
    validation: dict[int, float]
    wall_time_ms: float
    candidate_count: int | None = None
    stress: float | None = None
    bound: BoundCheck | None = None

    def to_dict(self) -> dict:
        data = asdict(self)
        data['validation'] = {str(depth): value for depth, value in self.validation.items()}
        data['bound'] = self.bound.to_dict() if self.bound else None
        return data


def run_once(config: ExperimentConfig, data: Dataset, run: int, M: int) -> RunResult:
    """One split, depth selection, retraining on train and test evaluation."""
    started = time.perf_counter()
    run_seed = derive_seed(config.seed, run)
    train, validation, test = split_dataset(data, run_seed)
    model_seed = derive_seed(run_seed, _MODEL_STREAM)

    embedding = None
    if config.algo == 'clems':
        candidates = build_candidate_set(train, source=config.candidates, extra=test)
        embedding = fit_embedding(
            candidates, config.spec, M,
            replace(config.mds, seed=derive_seed(model_seed, 0)),
        )

    depth, scores = select_depth(train, validation, config, M=M, seed=model_seed, embedding=embedding)
    model = fit_model(config, train, M, depth, model_seed, embedding=embedding)
    preds = model.predict(test.X)
    metrics = {criterion.value: evaluate(test.Y, preds, criterion) for criterion in REPORTED_CRITERIA}

    bound = check_bound(model, test) if config.verify_bound and embedding is not None else None
    result = RunResult(
        run=run,
        seed=run_seed,
        depth=depth,
        M=M,
        metrics=metrics,
        validation=scores,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
        candidate_count=embedding.L if embedding is not None else None,
        stress=embedding.stress if embedding is not None else None,
        bound=bound,
    )
    logger.info(
        f"{data.name} {config.label} run {run}: depth={depth} "
        + ' '.join(f"{name}={value:.4f}" for name, value in metrics.items())
    )
    return result


def summarize(values: Sequence[float]) -> dict[str, float]:
    """Mean, sample standard deviation and 95% CI half-width (0 for one run)."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    std = float(values.std(ddof=1)) if n > 1 else 0.0
    return {
        'mean': float(values.mean()),
        'std': std,
        'ci95': Z_95 * std / math.sqrt(n) if n > 1 else 0.0,
    }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    dataset: str
    M: int
    runs: list[RunResult]
    summary: dict[str, dict[str, float]]
    reference: dict[str, dict[str, float]]
    wall_time_ms: float

    @property
    def bound_totals(self) -> BoundCheck | None:
        checks = [run.bound for run in self.runs if run.bound is not None]
        if not checks:
            return None
        return BoundCheck(
            checked=sum(c.checked for c in checks),
            violations=sum(c.violations for c in checks),
            nearest_violations=sum(c.nearest_violations for c in checks),
            skipped=sum(c.skipped for c in checks),
        )

    def to_dict(self) -> dict:
        totals = self.bound_totals
        return {
            'schema_version': RESULTS_SCHEMA_VERSION,
            'dataset': self.dataset,
            'algo': self.config.label,
            'M': self.M,
            'config': self.config.to_dict(),
            'summary': self.summary,
            'reference': self.reference,
            'bound': totals.to_dict() if totals else None,
            'runs': [run.to_dict() for run in self.runs],
            'wall_time_ms': self.wall_time_ms,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                'dataset': self.dataset,
                'algo': self.config.label,
                'criterion': criterion,
                'M': self.M,
                'run': run.run,
                'value': value,
                'depth': run.depth,
                'seed': run.seed,
                'wall_time_ms': round(run.wall_time_ms, 3),
            }
            for run in self.runs
            for criterion, value in run.metrics.items()
        ]
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    @property
    def stem(self) -> str:
        return f"{self.dataset}_{self.config.label}_{self.config.criterion.value}_M{self.M}"


def reference_block(config: ExperimentConfig, dataset: str, K: int, M: int,
                    summary: dict[str, dict[str, float]]) -> dict[str, dict[str, float]]:
    """Published M = K numbers and, for CLEMS, the gap of the measured means to them."""
    block = {}
    if M != K:
        return block
    for criterion in (Criterion.F1, Criterion.ACCURACY, Criterion.RANK_LOSS):
        published = reference_for(dataset, criterion)
        if published is None:
            continue
        entry = dict(published)
        if config.algo == 'clems':
            entry['gap_to_clems'] = summary[criterion.value]['mean'] - published['clems']
        block[criterion.value] = entry
    return block


def run_experiment(config: ExperimentConfig, data: Dataset) -> ExperimentResult:
    """Run the protocol ``config.n_runs`` times and aggregate the test metrics."""
    started = time.perf_counter()
    M = resolve_embed_dim(config.embed_dim, data.K)
    if config.algo == 'plst' and M > data.K:
        logger.warning(f"PLST cannot expand the label space; using M={data.K} instead of {M}")
        M = data.K
    if config.algo == 'br':
        M = data.K

    logger.info(
        f"Experiment {data.name} {config.label} target={config.criterion.value} "
        f"M={M} runs={config.n_runs} seed={config.seed}"
    )
    runs = Parallel(n_jobs=config.n_jobs, prefer='threads')(
        delayed(run_once)(config, data, run, M) for run in range(config.n_runs)
    )
    runs = sorted(runs, key=lambda r: r.run)
    summary = {
        criterion.value: summarize([run.metrics[criterion.value] for run in runs])
        for criterion in REPORTED_CRITERIA
    }
    name = config.dataset or data.name
    return ExperimentResult(
        config=config,
        dataset=name,
        M=M,
        runs=runs,
        summary=summary,
        reference=reference_block(config, name, data.K, M, summary),
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
    )


def write_results(results: Iterable[ExperimentResult], out_dir: str | Path) -> list[Path]:
    """One JSON document per experiment and one CSV of per-run rows for all of them."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = list(results)
    written = []
    for result in results:
        path = out_dir / f"{result.stem}.json"
        path.write_text(json.dumps(result.to_dict(), indent=2), encoding='utf-8')
        written.append(path)
    if results:
        frame = pd.concat([result.to_frame() for result in results], ignore_index=True)
        first = results[0]
        path = out_dir / f"{first.dataset}_{first.config.criterion.value}_runs.csv"
        frame.to_csv(path, index=False)
        written.append(path)
    for path in written:
        logger.info(f"Wrote {path}")
    return written
