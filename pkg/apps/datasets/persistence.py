"""
Model files.

A model is saved as one JSON document::

    {
      "format": "clems-model",
      "format_version": 1,
      "kind": "clems" | "plst" | "br",
      "K": <labels>,
      "forest": {"params": {...}, "n_features": d, "seed": s,
                 "trees": [[{feature, threshold, left, right, value}, ...], ...]},
      "embedding": {...}      # kind == "clems"
      "projection": {...}     # kind == "plst"
    }

Floats are written with Python's shortest round-trip repr, so a loaded
model predicts bitwise identically to the saved one.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np
from django.core.exceptions import ValidationError

from apps.baselines.br import BrModel
from apps.baselines.plst import PlstModel
from apps.core.costs import CostSpec
from apps.core.exceptions import ClemsError, IncompatibleModelError, ModelFormatError, UnreadableInputError
from apps.embedding.clems import CandidateSet, ClemsModel, CsEmbedding
from apps.forest.forest import ForestModel, ForestParams
from apps.forest.tree import RegressionTree

logger = logging.getLogger(__name__)

FORMAT = 'clems-model'
FORMAT_VERSION = 1

Model = Union[ClemsModel, PlstModel, BrModel]


def _forest_to_dict(forest: ForestModel) -> dict:
    return {
        'params': forest.params.to_dict(),
        'n_features': forest.n_features,
        'seed': forest.seed,
        'trees': [[tree.to_dict() for tree in per_target] for per_target in forest.trees],
    }


def _forest_from_dict(data: dict) -> ForestModel:
    params = ForestParams(**data['params'])
    n_features = int(data['n_features'])
    trees = tuple(
        tuple(RegressionTree.from_dict(tree, n_features) for tree in per_target)
        for per_target in data['trees']
    )
    return ForestModel(params=params, trees=trees, n_features=n_features, seed=int(data.get('seed', 0)))


def _bits(row) -> str:
    return ''.join(str(int(b)) for b in row)


def _embedding_to_dict(embedding: CsEmbedding) -> dict:
    candidates = embedding.candidates
    return {
        'cost': {'criterion': embedding.spec.criterion.value, 'exponent': embedding.spec.exponent},
        'candidates': {
            'labels': [_bits(row) for row in candidates.labels],
            'freqs': candidates.freqs.tolist(),
            'source': candidates.source,
        },
        'truth_coords': embedding.truth_coords.tolist(),
        'pred_coords': embedding.pred_coords.tolist(),
        'stress': embedding.stress,
        'seed': embedding.seed,
        'iterations': embedding.iterations,
        'converged': embedding.converged,
    }


def _embedding_from_dict(data: dict) -> CsEmbedding:
    labels = np.array([[int(ch) for ch in bits] for bits in data['candidates']['labels']], dtype=np.int8)
    candidates = CandidateSet(
        labels,
        data['candidates']['freqs'],
        source=data['candidates'].get('source', 'train'),
    )
    spec = CostSpec(data['cost']['criterion'], exponent=float(data['cost'].get('exponent', 0.5)))
    return CsEmbedding(
        candidates=candidates,
        spec=spec,
        truth_coords=np.array(data['truth_coords'], dtype=np.float64),
        pred_coords=np.array(data['pred_coords'], dtype=np.float64),
        stress=float(data.get('stress', 0.0)),
        seed=int(data.get('seed', 0)),
        iterations=int(data.get('iterations', 0)),
        converged=bool(data.get('converged', True)),
    )


def model_to_dict(model: Model) -> dict:
    if isinstance(model, ClemsModel):
        if not isinstance(model.regressor, ForestModel):
            raise ModelFormatError("Only forest regressors can be saved")
        body = {'kind': 'clems', 'embedding': _embedding_to_dict(model.embedding)}
        forest = model.regressor
    elif isinstance(model, PlstModel):
        body = {'kind': 'plst', 'projection': {
            'mean': model.mean.tolist(),
            'components': model.projection.tolist(),
        }}
        forest = model.regressor
    elif isinstance(model, BrModel):
        body = {'kind': 'br'}
        forest = model.regressor
    else:
        raise ModelFormatError(f"Cannot save objects of type {type(model).__name__}")
    return {
        'format': FORMAT,
        'format_version': FORMAT_VERSION,
        'K': model.K,
        **body,
        'forest': _forest_to_dict(forest),
    }


def model_from_dict(data: dict) -> Model:
    if not isinstance(data, dict) or data.get('format') != FORMAT:
        raise ModelFormatError(f"Not a {FORMAT} document")
    version = data.get('format_version')
    if not isinstance(version, int) or version < 1:
        raise ModelFormatError(f"Invalid format_version {version!r}")
    if version > FORMAT_VERSION:
        raise IncompatibleModelError(
            f"Model file has format_version {version}; this build reads up to {FORMAT_VERSION}"
        )

    kind = data.get('kind')
    try:
        forest = _forest_from_dict(data['forest'])
        if kind == 'clems':
            model = ClemsModel(embedding=_embedding_from_dict(data['embedding']), regressor=forest)
        elif kind == 'plst':
            model = PlstModel(
                mean=data['projection']['mean'],
                projection=data['projection']['components'],
                regressor=forest,
            )
        elif kind == 'br':
            model = BrModel(regressor=forest)
        else:
            raise ModelFormatError(f"Unknown model kind {kind!r}")
    except (KeyError, TypeError, ValueError, ValidationError) as exc:
        if isinstance(exc, ClemsError):
            raise
        raise ModelFormatError(f"Invalid {kind or 'model'} document: {exc}") from exc

    if 'K' in data and model.K != data['K']:
        raise ModelFormatError(f"Model declares K={data['K']} but its contents have K={model.K}")
    return model


def save_model(model: Model, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model), separators=(',', ':')), encoding='utf-8')
    logger.info(f"Saved {type(model).__name__} to {path}")
    return path


def load_model(path: str | Path) -> Model:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise UnreadableInputError(f"Cannot read model file {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"{path} is not a text model file") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is truncated or not JSON: {exc.msg} at line {exc.lineno}") from exc
    model = model_from_dict(data)
    logger.info(f"Loaded {type(model).__name__} from {path}")
    return model
