"""
Domain types for multi-label data.

A dataset is kept as two dense arrays, ``X`` (N x d features) and ``Y``
(N x K binary labels). ``LabelVector`` and ``Instance`` are the per-row
views used wherever a single label vector has to be hashed, compared or
passed around on its own.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from django.core.exceptions import ValidationError

from .exceptions import DimensionError


@dataclass(frozen=True, order=True)
class LabelVector:
    """An immutable K-bit label vector."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        bits = tuple(int(b) for b in self.bits)
        if any(b not in (0, 1) for b in bits):
            raise ValidationError(f"Label vector must be binary, got {self.bits!r}")
        object.__setattr__(self, 'bits', bits)

    @classmethod
    def from_array(cls, values: Iterable) -> LabelVector:
        return cls(tuple(np.asarray(values).ravel().tolist()))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.bits, dtype=np.int8)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.bits)

    def __getitem__(self, index: int) -> int:
        return self.bits[index]

    def __str__(self) -> str:
        return ''.join(str(b) for b in self.bits)


@dataclass(frozen=True, eq=False)
class Instance:
    """One feature vector with its ground-truth label vector."""

    features: np.ndarray
    label: LabelVector


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    A multi-label dataset.

    Attributes:
        X: float64 array of shape (N, d).
        Y: int8 array of shape (N, K) holding only 0 and 1.
        name: optional dataset name, used in logs and result files.
        label_names: optional K label names in column order.
    """

    X: np.ndarray
    Y: np.ndarray
    name: str = ''
    label_names: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y)
        if X.ndim != 2 or Y.ndim != 2:
            raise DimensionError(
                f"Expected 2-D feature and label arrays, got shapes {X.shape} and {Y.shape}"
            )
        if X.shape[0] != Y.shape[0]:
            raise DimensionError(
                f"Feature rows ({X.shape[0]}) and label rows ({Y.shape[0]}) differ"
            )
        if Y.size and not np.isin(Y, (0, 1)).all():
            raise ValidationError("Label matrix must contain only 0 and 1")
        if not np.isfinite(X).all():
            raise ValidationError("Feature matrix contains non-finite values")
        if self.label_names and len(self.label_names) != Y.shape[1]:
            raise DimensionError(
                f"{len(self.label_names)} label names for {Y.shape[1]} label columns"
            )
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'Y', np.ascontiguousarray(Y, dtype=np.int8))
        object.__setattr__(self, 'label_names', tuple(self.label_names))

    @classmethod
    def from_instances(cls, instances: Sequence[Instance], name: str = '') -> Dataset:
        if not instances:
            raise ValidationError("Cannot build a dataset from zero instances")
        X = np.vstack([np.asarray(inst.features, dtype=np.float64) for inst in instances])
        Y = np.vstack([inst.label.as_array() for inst in instances])
        return cls(X, Y, name=name)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def K(self) -> int:
        return self.Y.shape[1]

    @property
    def instances(self) -> list[Instance]:
        return [Instance(self.X[i], LabelVector.from_array(self.Y[i])) for i in range(self.N)]

    def labels(self) -> list[LabelVector]:
        return [LabelVector.from_array(row) for row in self.Y]

    def subset(self, indices: np.ndarray, name: str | None = None) -> Dataset:
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            self.X[indices],
            self.Y[indices],
            name=self.name if name is None else name,
            label_names=self.label_names,
        )

    def concat(self, other: Dataset) -> Dataset:
        if other.d != self.d or other.K != self.K:
            raise DimensionError(
                f"Cannot concatenate datasets with (d, K) = ({self.d}, {self.K}) "
                f"and ({other.d}, {other.K})"
            )
        return Dataset(
            np.vstack([self.X, other.X]),
            np.vstack([self.Y, other.Y]),
            name=self.name,
            label_names=self.label_names,
        )

    def __len__(self) -> int:
        return self.N

    def __str__(self) -> str:
        return f"{self.name or 'dataset'} (N={self.N}, d={self.d}, K={self.K})"


def as_label_matrix(labels: Iterable, K: int | None = None) -> np.ndarray:
    """Stack label vectors (or arrays) into an int8 matrix, checking width."""
    rows = [np.asarray(lv.bits if isinstance(lv, LabelVector) else lv) for lv in labels]
    if not rows:
        width = 0 if K is None else K
        return np.zeros((0, width), dtype=np.int8)
    matrix = np.vstack(rows).astype(np.int8)
    if K is not None and matrix.shape[1] != K:
        raise DimensionError(f"Expected {K} labels per vector, got {matrix.shape[1]}")
    return matrix
