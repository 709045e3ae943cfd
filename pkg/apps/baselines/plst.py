"""
Principal label space transformation.

Labels are centered, projected on their top-M right singular vectors, and
regressed from the features; predictions are mapped back linearly and
rounded at 0.5 (ties go to 1).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from apps.core.exceptions import DimensionError
from apps.core.labels import Dataset
from apps.forest.forest import ForestModel, ForestParams, fit_forest

logger = logging.getLogger(__name__)

THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class PlstModel:
    mean: np.ndarray
    projection: np.ndarray
    regressor: ForestModel

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        projection = np.asarray(self.projection, dtype=np.float64)
        if projection.ndim != 2 or projection.shape[0] != mean.size:
            raise DimensionError(f"Projection {projection.shape} does not match K={mean.size}")
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'projection', projection)

    @property
    def K(self) -> int:
        return self.mean.size

    @property
    def M(self) -> int:
        return self.projection.shape[1]

    def encode(self, Y) -> np.ndarray:
        return (np.asarray(Y, dtype=np.float64) - self.mean) @ self.projection

    def reconstruct(self, Z) -> np.ndarray:
        """Real-valued label scores before rounding."""
        return self.mean + np.atleast_2d(np.asarray(Z, dtype=np.float64)) @ self.projection.T

    def round(self, scores) -> np.ndarray:
        return (np.asarray(scores) >= THRESHOLD).astype(np.int8)

    def predict(self, X) -> np.ndarray:
        return self.round(self.reconstruct(self.regressor.predict(X)))


def principal_directions(Y, n_components: int) -> tuple[np.ndarray, np.ndarray]:
    """Label mean and the top ``n_components`` right singular vectors (K x M)."""
    Y = np.asarray(Y, dtype=np.float64)
    mean = Y.mean(axis=0)
    centered = Y - mean
    # The thin V has min(N, K) rows; fewer examples than labels needs the full one.
    _, _, Vt = np.linalg.svd(centered, full_matrices=centered.shape[0] < centered.shape[1])
    return mean, Vt[:n_components].T.copy()


def fit_plst(data: Dataset, n_components: int, forest_params: ForestParams | None = None,
             seed: int = 0) -> PlstModel:
    if not 1 <= n_components <= data.K:
        raise ValidationError(f"PLST needs 1 <= M <= K={data.K}, got M={n_components}")
    mean, projection = principal_directions(data.Y, n_components)
    targets = (data.Y - mean) @ projection
    regressor = fit_forest(data.X, targets, forest_params or ForestParams(), seed=seed)
    logger.info(f"Fitted PLST on {data}: M={n_components}")
    return PlstModel(mean=mean, projection=projection, regressor=regressor)
