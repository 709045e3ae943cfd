"""
Cost and score functions for multi-label predictions.

Every criterion is computed from four counts per (truth, prediction) pair:
the number of ones in the truth, in the prediction, in their intersection,
and K. The scalar functions evaluate the textbook formulas directly; the
matrix and batch helpers use the same counts in closed form so that they
agree with the scalar functions bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from django.db import models

from .exceptions import CostDomainError, DimensionError


class Criterion(models.TextChoices):
    HAMMING = 'hamming', 'Hamming loss'
    F1 = 'f1', 'F1 score'
    ACCURACY = 'accuracy', 'Accuracy score'
    RANK_LOSS = 'rank_loss', 'Rank loss'


SCORE_CRITERIA = frozenset({Criterion.F1, Criterion.ACCURACY})

# Criteria reported for every evaluated model.
REPORTED_CRITERIA = (Criterion.F1, Criterion.ACCURACY, Criterion.RANK_LOSS, Criterion.HAMMING)


def _pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(getattr(y, 'bits', y))
    b = np.asarray(getattr(y_hat, 'bits', y_hat))
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise DimensionError(f"Label vectors of shapes {a.shape} and {b.shape} cannot be compared")
    if a.size == 0:
        raise DimensionError("Label vectors must have at least one component")
    return a, b


def hamming_loss(y, y_hat) -> float:
    a, b = _pair(y, y_hat)
    return float(np.count_nonzero(a != b)) / a.size


def f1_score(y, y_hat) -> float:
    """2|y ∩ ŷ| / (|y| + |ŷ|), with 1.0 when both vectors are empty."""
    a, b = _pair(y, y_hat)
    a, b = a.astype(np.int64), b.astype(np.int64)
    denominator = int(a.sum() + b.sum())
    if denominator == 0:
        return 1.0
    return 2 * int((a * b).sum()) / denominator


def accuracy_score(y, y_hat) -> float:
    """|y ∩ ŷ| / |y ∪ ŷ|, with 1.0 when both vectors are empty."""
    a, b = _pair(y, y_hat)
    a, b = a.astype(np.int64), b.astype(np.int64)
    union = int(np.maximum(a, b).sum())
    if union == 0:
        return 1.0
    return int((a * b).sum()) / union


def rank_loss(y, y_hat) -> float:
    """
    Unnormalized rank loss.

    Counts label pairs (i, j) with y[i] > y[j] that the prediction orders the
    wrong way round, plus one half for every such pair it ties.
    """
    a, b = _pair(y, y_hat)
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    relevant = a[:, None] > a[None, :]
    gap = b[:, None] - b[None, :]
    inverted = int(np.count_nonzero(relevant & (gap < 0)))
    tied = int(np.count_nonzero(relevant & (gap == 0)))
    return inverted + 0.5 * tied


_SCALAR_FUNCTIONS = {
    Criterion.HAMMING: hamming_loss,
    Criterion.F1: f1_score,
    Criterion.ACCURACY: accuracy_score,
    Criterion.RANK_LOSS: rank_loss,
}


def isotonic_delta(c):
    """Square-root isotonic transform; accepts a scalar or an array."""
    values = np.asarray(c, dtype=np.float64)
    if np.any(values < 0) or np.any(np.isnan(values)):
        raise CostDomainError(f"Isotonic transform needs nonnegative costs, got {c!r}")
    if values.ndim == 0:
        return math.sqrt(float(values))
    return np.sqrt(values)


@dataclass(frozen=True)
class CostSpec:
    """A criterion plus the isotonic transform used to embed its costs."""

    criterion: Criterion
    exponent: float = 0.5

    def __post_init__(self) -> None:
        try:
            criterion = Criterion(self.criterion)
        except ValueError:
            raise CostDomainError(
                f"Unknown criterion {self.criterion!r}; choose from {', '.join(Criterion.values)}"
            ) from None
        if not self.exponent > 0:
            raise CostDomainError(f"Isotonic exponent must be positive, got {self.exponent}")
        object.__setattr__(self, 'criterion', criterion)

    @property
    def is_score(self) -> bool:
        return self.criterion in SCORE_CRITERIA

    @property
    def direction(self) -> str:
        return 'score' if self.is_score else 'loss'

    def value(self, y, y_hat) -> float:
        """The raw criterion value: a score for F1/Accuracy, a loss otherwise."""
        return _SCALAR_FUNCTIONS[self.criterion](y, y_hat)

    def cost(self, y, y_hat) -> float:
        return cost_of(self, y, y_hat)

    def delta(self, c):
        if self.exponent == 0.5:
            return isotonic_delta(c)
        values = np.asarray(c, dtype=np.float64)
        if np.any(values < 0):
            raise CostDomainError(f"Isotonic transform needs nonnegative costs, got {c!r}")
        result = np.power(values, self.exponent)
        return float(result) if result.ndim == 0 else result

    def better(self, a: float, b: float) -> bool:
        """True when criterion value ``a`` is strictly better than ``b``."""
        return a > b if self.is_score else a < b

    def __str__(self) -> str:
        return self.criterion.value


def cost_of(spec: CostSpec, y, y_hat) -> float:
    """Nonnegative cost of predicting ``y_hat`` when the truth is ``y``."""
    value = _SCALAR_FUNCTIONS[spec.criterion](y, y_hat)
    return 1.0 - value if spec.is_score else value


def _from_counts(criterion: Criterion, n_true, n_pred, n_both, K: int) -> np.ndarray:
    """Criterion values from broadcastable count arrays (raw scores/losses)."""
    n_true = np.asarray(n_true, dtype=np.int64)
    n_pred = np.asarray(n_pred, dtype=np.int64)
    n_both = np.asarray(n_both, dtype=np.int64)

    if criterion == Criterion.HAMMING:
        return (n_true + n_pred - 2 * n_both) / K

    if criterion == Criterion.F1:
        denominator = n_true + n_pred
        safe = np.where(denominator == 0, 1, denominator)
        return np.where(denominator == 0, 1.0, 2 * n_both / safe)

    if criterion == Criterion.ACCURACY:
        union = n_true + n_pred - n_both
        safe = np.where(union == 0, 1, union)
        return np.where(union == 0, 1.0, n_both / safe)

    # Rank loss for binary predictions: a = (1,1), b = (1,0), c = (0,1), e = (0,0).
    a = n_both
    b = n_true - n_both
    c = n_pred - n_both
    e = K - n_true - n_pred + n_both
    return b * c + 0.5 * (a * c + b * e)


def cost_matrix(spec: CostSpec, truths: Sequence, predictions: Sequence) -> np.ndarray:
    """
    Matrix of c(truths[i], predictions[j]).

    Args:
        truths: L_a x K binary matrix (or sequence of label vectors).
        predictions: L_b x K binary matrix.

    Returns:
        float64 array of shape (L_a, L_b).
    """
    A = np.atleast_2d(np.asarray([getattr(r, 'bits', r) for r in truths], dtype=np.int64))
    B = np.atleast_2d(np.asarray([getattr(r, 'bits', r) for r in predictions], dtype=np.int64))
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"Label widths differ: {A.shape[1]} and {B.shape[1]}")
    K = A.shape[1]
    if K == 0:
        raise DimensionError("Label vectors must have at least one component")
    values = _from_counts(
        spec.criterion,
        A.sum(axis=1)[:, None],
        B.sum(axis=1)[None, :],
        A @ B.T,
        K,
    ).astype(np.float64)
    return 1.0 - values if spec.is_score else values


def criterion_values(Y_true, Y_pred, criterion) -> np.ndarray:
    """Per-instance criterion values for two N x K label matrices."""
    criterion = Criterion(criterion)
    T = np.asarray(Y_true, dtype=np.int64)
    P = np.asarray(Y_pred, dtype=np.int64)
    if T.ndim != 2 or T.shape != P.shape:
        raise DimensionError(f"Label matrices of shapes {T.shape} and {P.shape} cannot be compared")
    if T.shape[1] == 0:
        raise DimensionError("Label vectors must have at least one component")
    return _from_counts(
        criterion,
        T.sum(axis=1),
        P.sum(axis=1),
        (T * P).sum(axis=1),
        T.shape[1],
    ).astype(np.float64)
