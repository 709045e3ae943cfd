"""
Published statistics of the Mulan benchmark datasets.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from apps.core.labels import Dataset


@dataclass(frozen=True)
class DatasetStats:
    K: int
    d: int
    N: int
    distinct: int

    def to_dict(self) -> dict:
        return asdict(self)


CATALOG: dict[str, DatasetStats] = {
    'emotions': DatasetStats(K=6, d=72, N=593, distinct=27),
    'scene': DatasetStats(K=6, d=294, N=2407, distinct=15),
    'yeast': DatasetStats(K=14, d=103, N=2417, distinct=198),
    'birds': DatasetStats(K=19, d=260, N=645, distinct=133),
    'medical': DatasetStats(K=45, d=1449, N=978, distinct=94),
    'enron': DatasetStats(K=53, d=1001, N=1702, distinct=753),
    'CAL500': DatasetStats(K=174, d=68, N=502, distinct=502),
    'EUR-Lex(dc)': DatasetStats(K=412, d=5000, N=19348, distinct=1615),
}

# Datasets small enough for the full 20-run protocol on a workstation.
DESK_SCALE = ('emotions', 'scene', 'yeast', 'birds', 'medical', 'enron', 'CAL500')


def describe(dataset: Dataset) -> DatasetStats:
    distinct = len(np.unique(dataset.Y, axis=0)) if dataset.N else 0
    return DatasetStats(K=dataset.K, d=dataset.d, N=dataset.N, distinct=distinct)


def lookup(name: str) -> DatasetStats | None:
    """Catalog entry for ``name``, matched case-insensitively."""
    if name in CATALOG:
        return CATALOG[name]
    folded = {key.lower(): value for key, value in CATALOG.items()}
    return folded.get(name.lower())


def compare(name: str, stats: DatasetStats) -> list[str]:
    """Human-readable mismatches between ``stats`` and the catalog entry."""
    expected = lookup(name)
    if expected is None:
        return []
    return [
        f"{field}: expected {want}, found {got}"
        for field, want in expected.to_dict().items()
        if (got := getattr(stats, field)) != want
    ]
