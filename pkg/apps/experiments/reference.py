"""
Published test results at M = K, used as reference numbers in experiment output.

``clems`` are the CLEMS results and ``cft`` those of the strongest
cost-sensitive competitor (condensed filter tree), each targeting the
criterion it is reported under.
"""
from __future__ import annotations

from apps.core.costs import Criterion

REFERENCE: dict[str, dict[str, dict[str, float]]] = {
    'emotions': {
        'cft': {Criterion.F1: 0.640, Criterion.ACCURACY: 0.557, Criterion.RANK_LOSS: 1.563},
        'clems': {Criterion.F1: 0.676, Criterion.ACCURACY: 0.589, Criterion.RANK_LOSS: 1.484},
    },
    'scene': {
        'cft': {Criterion.F1: 0.703, Criterion.ACCURACY: 0.656, Criterion.RANK_LOSS: 0.723},
        'clems': {Criterion.F1: 0.770, Criterion.ACCURACY: 0.760, Criterion.RANK_LOSS: 0.672},
    },
    'yeast': {
        'cft': {Criterion.F1: 0.649, Criterion.ACCURACY: 0.543, Criterion.RANK_LOSS: 8.566},
        'clems': {Criterion.F1: 0.671, Criterion.ACCURACY: 0.568, Criterion.RANK_LOSS: 8.302},
    },
    'birds': {
        'cft': {Criterion.F1: 0.601, Criterion.ACCURACY: 0.586, Criterion.RANK_LOSS: 4.908},
        'clems': {Criterion.F1: 0.674, Criterion.ACCURACY: 0.642, Criterion.RANK_LOSS: 4.886},
    },
    'medical': {
        'cft': {Criterion.F1: 0.635, Criterion.ACCURACY: 0.613, Criterion.RANK_LOSS: 5.811},
        'clems': {Criterion.F1: 0.814, Criterion.ACCURACY: 0.786, Criterion.RANK_LOSS: 5.170},
    },
    'enron': {
        'cft': {Criterion.F1: 0.557, Criterion.ACCURACY: 0.448, Criterion.RANK_LOSS: 26.64},
        'clems': {Criterion.F1: 0.606, Criterion.ACCURACY: 0.491, Criterion.RANK_LOSS: 29.40},
    },
    'CAL500': {
        'cft': {Criterion.F1: 0.371, Criterion.ACCURACY: 0.237, Criterion.RANK_LOSS: 1120.8},
        'clems': {Criterion.F1: 0.419, Criterion.ACCURACY: 0.273, Criterion.RANK_LOSS: 1247.9},
    },
    'EUR-Lex(dc)': {
        'cft': {Criterion.F1: 0.456, Criterion.ACCURACY: 0.450, Criterion.RANK_LOSS: 129.53},
        'clems': {Criterion.F1: 0.670, Criterion.ACCURACY: 0.650, Criterion.RANK_LOSS: 89.52},
    },
}


def reference_for(dataset: str, criterion) -> dict[str, float] | None:
    """``{'clems': x, 'cft': y}`` for a dataset and criterion, if published."""
    criterion = Criterion(criterion)
    entry = REFERENCE.get(dataset) or {k.lower(): v for k, v in REFERENCE.items()}.get(dataset.lower())
    if entry is None or criterion not in entry['clems']:
        return None
    return {source: float(values[criterion]) for source, values in entry.items()}
