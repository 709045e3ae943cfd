"""
Multi-target regression as M independent single-target random forests.

Each tree gets its own seed derived from (master seed, target, tree), so a
forest is reproducible whatever the number of worker threads.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np
from django.core.exceptions import ValidationError
from joblib import Parallel, delayed
from sklearn.tree import DecisionTreeRegressor

from apps.core.exceptions import DimensionError
from apps.core.seeding import make_rng

from .tree import RegressionTree, fit_tree, n_split_features

logger = logging.getLogger(__name__)

ENGINES = ('native', 'sklearn')


@dataclass(frozen=True)
class ForestParams:
    """
    Forest hyperparameters.

    ``max_features`` is a fraction of d (float), a count (int) or ``None``
    for all features. ``engine`` picks the split search: ``native`` is the
    numpy CART in :mod:`apps.forest.tree`, ``sklearn`` grows each tree with
    scikit-learn and converts it to the same node arrays.

    The engines agree on the split criterion but not on ties. ``native`` takes
    the lowest feature index, then the lowest threshold, among equally good
    splits. scikit-learn visits features in a seeded random order and keeps
    the first best split it meets, so with tied candidates the two engines
    can grow different trees from the same seed. Each engine on its own is
    deterministic for a given seed.
    """

    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    max_features: float | int | None = 1 / 3
    bootstrap: bool = True
    engine: str = 'sklearn'
    n_jobs: int = 1

    def __post_init__(self) -> None:
        errors = {}
        if self.n_trees < 1:
            errors['n_trees'] = f"n_trees must be >= 1, got {self.n_trees}"
        if self.max_depth is not None and self.max_depth < 0:
            errors['max_depth'] = f"max_depth must be >= 0, got {self.max_depth}"
        if self.min_leaf < 1:
            errors['min_leaf'] = f"min_leaf must be >= 1, got {self.min_leaf}"
        if isinstance(self.max_features, float) and not 0 < self.max_features <= 1:
            errors['max_features'] = f"max_features fraction must be in (0, 1], got {self.max_features}"
        if self.engine not in ENGINES:
            errors['engine'] = f"engine must be one of {ENGINES}, got {self.engine!r}"
        if errors:
            raise ValidationError(errors)

    def with_depth(self, max_depth: int | None) -> ForestParams:
        return replace(self, max_depth=max_depth)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop('n_jobs')
        return data


@dataclass(frozen=True, eq=False)
class ForestModel:
    """``trees[m]`` holds the ``n_trees`` trees of target dimension ``m``."""

    params: ForestParams
    trees: tuple[tuple[RegressionTree, ...], ...]
    n_features: int
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.trees:
            raise ValidationError("A forest needs at least one target")
        counts = {len(per_target) for per_target in self.trees}
        if counts != {self.params.n_trees}:
            raise ValidationError(
                f"Every target needs exactly {self.params.n_trees} trees, got counts {sorted(counts)}"
            )

    @property
    def M(self) -> int:
        return len(self.trees)

    def predict(self, X) -> np.ndarray:
        """N x M matrix of per-target mean tree outputs."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionError(f"Forest expects {self.n_features} features, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.M))
        for m, per_target in enumerate(self.trees):
            out[:, m] = np.mean([tree.predict(X) for tree in per_target], axis=0)
        return out


def _grow(X: np.ndarray, t: np.ndarray, params: ForestParams, seed: int, target: int, index: int) -> RegressionTree:
    rng = make_rng(seed, target, index)
    n = t.size
    rows = rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
    if params.engine == 'native':
        return fit_tree(
            X[rows], t[rows],
            max_depth=params.max_depth,
            min_leaf=params.min_leaf,
            max_features=params.max_features,
            rng=rng,
        )
    estimator = DecisionTreeRegressor(
        max_depth=params.max_depth,
        min_samples_leaf=params.min_leaf,
        max_features=n_split_features(params.max_features, X.shape[1]),
        random_state=int(rng.integers(np.iinfo(np.int32).max)),
    )
    estimator.fit(X[rows], t[rows])
    return RegressionTree.from_sklearn(estimator)


def fit_forest(X, T, params: ForestParams | None = None, seed: int = 0,
               target_keys=None) -> ForestModel:
    """
    Train one forest per column of ``T``.

    Args:
        X: N x d features.
        T: N x M targets (a 1-D array is treated as M = 1).
        params: forest hyperparameters.
        seed: master seed; identical seeds give bitwise-identical forests.
        target_keys: optional integer per target used in place of the column
            position when deriving tree seeds.
    """
    params = params or ForestParams()
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if T.ndim == 1:
        T = T[:, None]
    if X.ndim != 2 or T.ndim != 2 or X.shape[0] != T.shape[0]:
        raise DimensionError(f"Features {X.shape} and targets {T.shape} do not match")
    if X.shape[0] == 0:
        raise ValidationError("Cannot fit a forest on zero rows")

    keys = list(range(T.shape[1])) if target_keys is None else [int(k) for k in target_keys]
    if len(keys) != T.shape[1]:
        raise DimensionError(f"{len(keys)} target keys for {T.shape[1]} targets")
    jobs = [(m, k) for m in range(T.shape[1]) for k in range(params.n_trees)]
    grown = Parallel(n_jobs=params.n_jobs, prefer='threads')(
        delayed(_grow)(X, T[:, m], params, seed, keys[m], k) for m, k in jobs
    )
    trees = tuple(
        tuple(grown[m * params.n_trees:(m + 1) * params.n_trees]) for m in range(T.shape[1])
    )
    logger.debug(
        f"Fitted {params.engine} forest: M={T.shape[1]}, n_trees={params.n_trees}, "
        f"max_depth={params.max_depth}, N={X.shape[0]}, d={X.shape[1]}"
    )
    return ForestModel(params=params, trees=trees, n_features=X.shape[1], seed=seed)
