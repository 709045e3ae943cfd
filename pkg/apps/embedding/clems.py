"""
Cost-sensitive label embedding with multidimensional scaling.

Pipeline:
    1. collect the candidate set S of distinct label vectors with frequencies;
    2. mirror every candidate into a truth-role and a prediction-role copy and
       build the 2L x 2L dissimilarity/weight matrices from the isotonic costs;
    3. solve weighted MDS; the first L rows are the truth-role coordinates
       (the decoding set), the last L rows the prediction-role coordinates
       (the regression targets);
    4. regress features onto the prediction-role coordinates and decode new
       predictions to the candidate with the nearest truth-role coordinate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np
import pandas as pd
from django.core.exceptions import ValidationError
from scipy.spatial.distance import cdist

from apps.core.costs import CostSpec, cost_matrix
from apps.core.exceptions import DimensionError, NotEmbeddableError
from apps.core.labels import Dataset, LabelVector
from apps.core.seeding import derive_seed
from apps.forest.forest import ForestParams, fit_forest
from apps.mds.smacof import DEFAULT_MAX_ITER, DEFAULT_TOL, MdsProblem, solve

logger = logging.getLogger(__name__)

CANDIDATE_SOURCES = ('train', 'all')

# Absolute slack for the float comparisons of the decoding bound.
BOUND_SLACK = 1e-9

_MDS_STREAM = 0
_REGRESSOR_STREAM = 1


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Distinct label vectors (L x K) with their occurrence counts."""

    labels: np.ndarray
    freqs: np.ndarray
    source: str = 'train'
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.int8)
        freqs = np.asarray(self.freqs, dtype=np.int64)
        if labels.ndim != 2 or labels.shape[0] == 0:
            raise ValidationError("A candidate set needs at least one label vector")
        if freqs.shape != (labels.shape[0],):
            raise DimensionError(f"{freqs.shape[0]} frequencies for {labels.shape[0]} candidates")
        if (freqs < 1).any():
            raise ValidationError("Candidate frequencies must be positive")
        if self.source not in CANDIDATE_SOURCES:
            raise ValidationError(f"Unknown candidate source {self.source!r}")
        index = {row.tobytes(): i for i, row in enumerate(labels)}
        if len(index) != labels.shape[0]:
            raise ValidationError("Candidate label vectors must be pairwise distinct")
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'freqs', freqs)
        object.__setattr__(self, '_index', index)

    @property
    def L(self) -> int:
        return self.labels.shape[0]

    @property
    def K(self) -> int:
        return self.labels.shape[1]

    @property
    def total(self) -> int:
        return int(self.freqs.sum())

    def vector(self, i: int) -> LabelVector:
        return LabelVector.from_array(self.labels[i])

    def index_of(self, y) -> int:
        row = np.asarray(getattr(y, 'bits', y), dtype=np.int8)
        if row.shape != (self.K,):
            raise DimensionError(f"Label vector of length {row.size} for a K={self.K} candidate set")
        try:
            return self._index[row.tobytes()]
        except KeyError:
            raise NotEmbeddableError(f"Label vector {''.join(map(str, row))} is not a candidate") from None

    def indices_of(self, Y) -> np.ndarray:
        return np.array([self.index_of(row) for row in np.asarray(Y)], dtype=np.intp)

    def __contains__(self, y) -> bool:
        try:
            self.index_of(y)
        except (NotEmbeddableError, DimensionError):
            return False
        return True

    def __len__(self) -> int:
        return self.L


def build_candidate_set(data: Dataset, source: str = 'train', extra: Dataset | None = None) -> CandidateSet:
    """
    Distinct label vectors of ``data`` with occurrence counts.

    With ``source='all'`` the label vectors of ``extra`` (normally the test
    split) are added and counted too. Candidates are sorted lexicographically.
    """
    if source not in CANDIDATE_SOURCES:
        raise ValidationError(f"Unknown candidate source {source!r}; choose from {CANDIDATE_SOURCES}")
    if data.N == 0:
        raise ValidationError("Cannot build a candidate set from an empty dataset")
    Y = data.Y
    if source == 'all' and extra is not None:
        if extra.K != data.K:
            raise DimensionError(f"Extra data has K={extra.K}, expected {data.K}")
        Y = np.vstack([Y, extra.Y])
    labels, counts = np.unique(Y, axis=0, return_counts=True)
    candidates = CandidateSet(labels, counts, source=source)
    logger.info(f"Candidate set ({source}) of {data.name or 'dataset'}: L={candidates.L} from {candidates.total} instances")
    return candidates


@dataclass(frozen=True, eq=False)
class MirroredProblem(MdsProblem):
    """
    MDS problem over the 2L mirrored candidates.

    Objects 0..L-1 are the truth-role copies, objects L..2L-1 the
    prediction-role copies of the same candidates.
    """

    candidate_count: int = 0

    @property
    def truth_rows(self) -> slice:
        return slice(0, self.candidate_count)

    @property
    def prediction_rows(self) -> slice:
        return slice(self.candidate_count, 2 * self.candidate_count)


def build_mirrored_problem(candidates: CandidateSet, spec: CostSpec, n_components: int) -> MirroredProblem:
    """Dissimilarity and weight matrices of the mirroring construction."""
    L = candidates.L
    if L == 1:
        logger.warning("Candidate set has a single label vector; every prediction decodes to it")

    isotonic = np.asarray(spec.delta(spec_cost_matrix(spec, candidates)), dtype=np.float64)
    weights_block = np.repeat(candidates.freqs.astype(np.float64)[:, None], L, axis=1)

    delta = np.zeros((2 * L, 2 * L))
    delta[:L, L:] = isotonic
    delta[L:, :L] = isotonic.T

    weights = np.zeros((2 * L, 2 * L))
    weights[:L, L:] = weights_block
    weights[L:, :L] = weights_block.T

    return MirroredProblem(delta, weights, n_components=n_components, candidate_count=L)


def spec_cost_matrix(spec: CostSpec, candidates: CandidateSet) -> np.ndarray:
    """L x L matrix of c(y_i, y_j) over the candidates."""
    return cost_matrix(spec, candidates.labels, candidates.labels)


@dataclass(frozen=True)
class MdsOptions:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    n_init: int = 1
    seed: int = 0


@dataclass(frozen=True)
class DecodingBound:
    """Terms of the decoding bound for one (truth, predicted vector) pair."""

    lhs: float
    embed_err: float
    regr_err: float
    holds: bool
    nearest_step_holds: bool
    decoded_index: int


@dataclass(frozen=True, eq=False)
class CsEmbedding:
    """
    A fitted cost-sensitive embedding.

    ``truth_coords`` (L x M) is the decoding set; ``pred_coords`` (L x M)
    holds the embedded vector of every candidate, i.e. the regression targets.
    """

    candidates: CandidateSet
    spec: CostSpec
    truth_coords: np.ndarray
    pred_coords: np.ndarray
    stress: float
    seed: int = 0
    iterations: int = 0
    converged: bool = True

    def __post_init__(self) -> None:
        truth = np.asarray(self.truth_coords, dtype=np.float64)
        pred = np.asarray(self.pred_coords, dtype=np.float64)
        expected = (self.candidates.L, truth.shape[1] if truth.ndim == 2 else -1)
        if truth.ndim != 2 or truth.shape != pred.shape or truth.shape != expected or truth.shape[1] < 1:
            raise DimensionError(
                f"Coordinate matrices {truth.shape} and {pred.shape} do not fit L={self.candidates.L}"
            )
        truth.setflags(write=False)
        pred.setflags(write=False)
        object.__setattr__(self, 'truth_coords', truth)
        object.__setattr__(self, 'pred_coords', pred)

    @property
    def M(self) -> int:
        return self.truth_coords.shape[1]

    @property
    def L(self) -> int:
        return self.candidates.L

    def embed(self, y) -> np.ndarray:
        """Prediction-role coordinate of candidate ``y``."""
        return self.pred_coords[self.candidates.index_of(y)].copy()

    def embed_many(self, Y) -> np.ndarray:
        return self.pred_coords[self.candidates.indices_of(Y)]

    def decode(self, Z) -> tuple[np.ndarray, np.ndarray]:
        """
        Nearest truth-role coordinate for each row of ``Z``.

        Exact distance ties go to the more frequent candidate, then to the
        lower index. Returns (indices, distances).
        """
        Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
        if Z.shape[1] != self.M:
            raise DimensionError(f"Predicted vectors have dimension {Z.shape[1]}, embedding has {self.M}")
        distances = cdist(Z, self.truth_coords)
        nearest = distances.min(axis=1)
        tied_freqs = np.where(distances == nearest[:, None], self.candidates.freqs[None, :], -1)
        indices = np.argmax(tied_freqs, axis=1)
        return indices, nearest

    def decode_nearest(self, z) -> tuple[LabelVector, int, float]:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.M,):
            raise DimensionError(f"Predicted vector has shape {z.shape}, expected ({self.M},)")
        indices, distances = self.decode(z[None, :])
        index = int(indices[0])
        return self.candidates.vector(index), index, float(distances[0])

    def decode_labels(self, Z) -> np.ndarray:
        indices, _ = self.decode(Z)
        return self.candidates.labels[indices]

    def decoding_bound(self, y_true, z_hat) -> DecodingBound:
        """
        Check δ(c(y, y_q))² <= 5((d(z, z_q) - δ(c(y, y_q)))² + d(z, ẑ)²).

        ``z`` is the truth-role coordinate of ``y_true``, so it lives in the
        same set as the decoded ``z_q`` and d(z, ẑ) >= d(z, z_q) / 2 follows
        from the nearest-neighbour choice of ``z_q``.
        """
        z = self.truth_coords[self.candidates.index_of(y_true)]
        y_q, q, _ = self.decode_nearest(z_hat)
        isotonic = float(self.spec.delta(self.spec.cost(y_true, y_q)))
        d_z_zq = float(np.linalg.norm(z - self.truth_coords[q]))
        d_z_zhat = float(np.linalg.norm(z - np.asarray(z_hat, dtype=np.float64)))
        lhs = isotonic ** 2
        embed_err = (d_z_zq - isotonic) ** 2
        regr_err = d_z_zhat ** 2
        return DecodingBound(
            lhs=lhs,
            embed_err=embed_err,
            regr_err=regr_err,
            holds=lhs <= 5.0 * (embed_err + regr_err) + BOUND_SLACK,
            nearest_step_holds=d_z_zhat >= 0.5 * d_z_zq - BOUND_SLACK,
            decoded_index=q,
        )

    def to_frame(self) -> pd.DataFrame:
        """One row per (role, candidate): role, candidate_index, frequency, z0..z{M-1}."""
        coords = [f"z{m}" for m in range(self.M)]
        frames = []
        for role, matrix in (('t', self.truth_coords), ('p', self.pred_coords)):
            frame = pd.DataFrame(matrix, columns=coords)
            frame.insert(0, 'frequency', self.candidates.freqs)
            frame.insert(0, 'candidate_index', np.arange(self.L))
            frame.insert(0, 'role', role)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)


def fit_embedding(candidates: CandidateSet, spec: CostSpec, n_components: int,
                  options: MdsOptions | None = None) -> CsEmbedding:
    """Solve the mirrored MDS problem and split it into the two coordinate roles."""
    options = options or MdsOptions()
    problem = build_mirrored_problem(candidates, spec, n_components)
    solution = solve(
        problem,
        seed=options.seed,
        tol=options.tol,
        max_iter=options.max_iter,
        n_init=options.n_init,
    )
    if not solution.converged:
        logger.warning(
            f"MDS stopped at max_iter={options.max_iter} with stress {solution.stress:.6g}"
        )
    X = solution.embedding
    embedding = CsEmbedding(
        candidates=candidates,
        spec=spec,
        truth_coords=X[problem.truth_rows],
        pred_coords=X[problem.prediction_rows],
        stress=solution.stress,
        seed=options.seed,
        iterations=solution.iterations,
        converged=solution.converged,
    )
    logger.info(
        f"Embedded L={candidates.L} candidates in M={n_components} ({spec}): "
        f"stress={solution.stress:.6g}, iterations={solution.iterations}"
    )
    return embedding


class Regressor(Protocol):
    def predict(self, X) -> np.ndarray:
        ...


RegressorFactory = Callable[[np.ndarray, np.ndarray, int], Regressor]


@dataclass(frozen=True, eq=False)
class ClemsModel:
    """A fitted embedding plus the regressor from features to the embedded space."""

    embedding: CsEmbedding
    regressor: Regressor

    @property
    def K(self) -> int:
        return self.embedding.candidates.K

    def predict_embedded(self, X) -> np.ndarray:
        return np.asarray(self.regressor.predict(np.atleast_2d(X)), dtype=np.float64)

    def predict(self, X) -> np.ndarray:
        return self.embedding.decode_labels(self.predict_embedded(X))


def fit_clems(train: Dataset, spec: CostSpec, n_components: int, seed: int = 0, *,
              forest_params=None, source: str = 'train', extra: Dataset | None = None,
              mds_options: MdsOptions | None = None, embedding: CsEmbedding | None = None,
              regressor_factory: RegressorFactory | None = None) -> ClemsModel:
    """
    Fit the embedding (unless one is supplied) and the regressor on ``train``.

    A supplied ``embedding`` is reused as is; the harness does this to try
    several tree depths against one embedding.
    """
    if embedding is None:
        candidates = build_candidate_set(train, source=source, extra=extra)
        options = replace(mds_options or MdsOptions(), seed=derive_seed(seed, _MDS_STREAM))
        embedding = fit_embedding(candidates, spec, n_components, options)

    targets = embedding.embed_many(train.Y)
    regressor_seed = derive_seed(seed, _REGRESSOR_STREAM)
    if regressor_factory is None:
        regressor = fit_forest(train.X, targets, forest_params or ForestParams(), seed=regressor_seed)
    else:
        regressor = regressor_factory(train.X, targets, regressor_seed)
    return ClemsModel(embedding=embedding, regressor=regressor)
