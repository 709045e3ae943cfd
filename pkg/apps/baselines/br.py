"""Binary relevance: one regression forest per label, thresholded at 0.5."""
from __future__ import annotations

import logging
import zlib
from dataclasses import dataclass

import numpy as np

from apps.core.labels import Dataset
from apps.forest.forest import ForestModel, ForestParams, fit_forest

logger = logging.getLogger(__name__)

THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class BrModel:
    regressor: ForestModel

    @property
    def K(self) -> int:
        return self.regressor.M

    def scores(self, X) -> np.ndarray:
        return self.regressor.predict(X)

    def predict(self, X) -> np.ndarray:
        return (self.scores(X) >= THRESHOLD).astype(np.int8)


def fit_br(data: Dataset, forest_params: ForestParams | None = None, seed: int = 0) -> BrModel:
    # Tree seeds follow each label column's content, not its position, so
    # permuting the labels permutes the predictions the same way.
    Y = np.ascontiguousarray(data.Y)
    keys = [zlib.crc32(np.ascontiguousarray(Y[:, k]).tobytes()) for k in range(data.K)]
    regressor = fit_forest(data.X, Y.astype(np.float64), forest_params or ForestParams(), seed=seed,
                           target_keys=keys)
    logger.info(f"Fitted binary relevance on {data}: K={data.K}")
    return BrModel(regressor=regressor)
