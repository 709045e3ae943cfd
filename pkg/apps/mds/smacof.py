"""
Weighted metric multidimensional scaling by stress majorization (SMACOF).

The solver knows nothing about labels or costs: it embeds n objects given a
dissimilarity matrix and a weight matrix. Each iteration applies the Guttman
transform X <- V^+ B(X) X, which never increases the weighted stress.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import pdist, squareform

from apps.core.exceptions import DecompositionError, DimensionError
from apps.core.seeding import make_rng

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 300

_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True, eq=False)
class MdsProblem:
    """
    n objects to embed in ``n_components`` dimensions.

    ``dissimilarities`` and ``weights`` are n x n. Invariants are checked by
    :meth:`validate`, not on construction, so that degenerate matrices can
    still be scored with :func:`stress`.
    """

    dissimilarities: np.ndarray
    weights: np.ndarray
    n_components: int = 2

    def __post_init__(self) -> None:
        delta = np.asarray(self.dissimilarities, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if delta.ndim != 2 or delta.shape[0] != delta.shape[1] or delta.shape != weights.shape:
            raise DimensionError(
                f"Dissimilarity {delta.shape} and weight {weights.shape} matrices must be equal and square"
            )
        object.__setattr__(self, 'dissimilarities', delta)
        object.__setattr__(self, 'weights', weights)

    @property
    def n(self) -> int:
        return self.dissimilarities.shape[0]

    def validate(self) -> None:
        errors = {}
        for name, matrix in (('dissimilarities', self.dissimilarities), ('weights', self.weights)):
            problems = []
            if not np.isfinite(matrix).all():
                problems.append('contains non-finite entries')
            if not np.array_equal(matrix, matrix.T):
                problems.append('is not symmetric')
            if (matrix < 0).any():
                problems.append('has negative entries')
            if np.any(np.diag(matrix) != 0):
                problems.append('has a nonzero diagonal')
            if problems:
                errors[name] = f"{name.capitalize()} matrix " + ', '.join(problems) + '.'
        if self.n_components < 1:
            errors['n_components'] = f"Target dimension must be at least 1, got {self.n_components}."
        if self.n < 2:
            errors['n'] = f"Need at least two objects, got {self.n}."
        elif 'weights' not in errors:
            empty = np.flatnonzero(self.weights.sum(axis=1) == 0)
            if empty.size:
                errors['weights'] = f"Objects {empty[:10].tolist()} have all-zero weight rows."
        if errors:
            raise ValidationError(errors)


@dataclass(frozen=True, eq=False)
class MdsSolution:
    embedding: np.ndarray
    stress_history: tuple[float, ...]
    iterations: int
    converged: bool
    seed: int | None = None

    @property
    def stress(self) -> float:
        return self.stress_history[-1]


def _check_coordinates(X, problem: MdsProblem) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (problem.n, problem.n_components):
        raise DimensionError(
            f"Coordinates of shape {X.shape} do not match problem shape ({problem.n}, {problem.n_components})"
        )
    return X


def _distances(X: np.ndarray) -> np.ndarray:
    return squareform(pdist(X))


def stress(X, problem: MdsProblem) -> float:
    """Weighted raw stress summed over all ordered pairs (i, j)."""
    X = _check_coordinates(X, problem)
    residual = problem.dissimilarities - _distances(X)
    return float(np.sum(problem.weights * residual ** 2))


def pinv_v(weights) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse of the weighted Laplacian V of ``weights``.

    V has the all-ones vector in its nullspace; for a connected weight graph
    that is the whole nullspace and V^+ = (V + J/n)^-1 - J/n.
    """
    W = np.asarray(weights, dtype=np.float64)
    n = W.shape[0]
    off_diagonal = W.copy()
    np.fill_diagonal(off_diagonal, 0.0)

    n_parts, membership = connected_components(off_diagonal > 0, directed=False)
    if n_parts > 1:
        sizes = np.bincount(membership).tolist()
        raise DecompositionError(
            f"Weight graph is disconnected ({n_parts} components of sizes {sizes}); "
            "relative positions of the components are undetermined"
        )

    V = -off_diagonal
    np.fill_diagonal(V, off_diagonal.sum(axis=1))
    J = np.full((n, n), 1.0 / n)
    try:
        return np.linalg.inv(V + J) - J
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"Weighted Laplacian could not be inverted: {exc}") from exc


def guttman_step(X, problem: MdsProblem, V_pinv: np.ndarray) -> np.ndarray:
    """One Guttman transform X' = V^+ B(X) X."""
    X = _check_coordinates(X, problem)
    D = _distances(X)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(D > 0, problem.weights * problem.dissimilarities / D, 0.0)
    B = -ratio
    np.fill_diagonal(B, 0.0)
    np.fill_diagonal(B, -B.sum(axis=1))
    return V_pinv @ (B @ X)


def _iterate(X: np.ndarray, problem: MdsProblem, V_pinv: np.ndarray, tol: float,
             max_iter: int, seed: int | None) -> MdsSolution:
    current = stress(X, problem)
    history = [current]
    converged = False
    for _ in range(max_iter):
        candidate = guttman_step(X, problem, V_pinv)
        candidate_stress = stress(candidate, problem)
        if candidate_stress > current:
            # Rounding noise at the optimum; keep the previous iterate.
            converged = True
            break
        previous, current, X = current, candidate_stress, candidate
        history.append(current)
        if (previous - current) / max(previous, _TINY) < tol:
            converged = True
            break
    logger.debug(
        f"SMACOF run seed={seed}: stress {history[0]:.6g} -> {history[-1]:.6g} "
        f"in {len(history) - 1} iterations (converged={converged})"
    )
    return MdsSolution(
        embedding=X,
        stress_history=tuple(history),
        iterations=len(history) - 1,
        converged=converged,
        seed=seed,
    )


def initial_coordinates(n: int, n_components: int, seed: int, restart: int = 0) -> np.ndarray:
    """Seeded uniform coordinates in [-1, 1]^M."""
    return make_rng(seed, restart).uniform(-1.0, 1.0, size=(n, n_components))


def has_complete_weights(problem: MdsProblem) -> bool:
    off_diagonal = ~np.eye(problem.n, dtype=bool)
    return bool((problem.weights[off_diagonal] > 0).all())


def classical_scaling(problem: MdsProblem) -> np.ndarray:
    """
    Torgerson coordinates from the double-centred squared dissimilarities.

    Recovers the configuration exactly when the dissimilarities are Euclidean
    distances in ``n_components`` dimensions. Weights are ignored, so this is
    only a sensible start when every pair carries weight.
    """
    n, M = problem.n, problem.n_components
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (problem.dissimilarities ** 2) @ J
    eigenvalues, eigenvectors = np.linalg.eigh((B + B.T) / 2)
    order = np.argsort(eigenvalues)[::-1][:M]
    X = np.zeros((n, M))
    X[:, :order.size] = eigenvectors[:, order] * np.sqrt(np.clip(eigenvalues[order], 0.0, None))
    return X


def solve(problem: MdsProblem, init=None, seed: int = 0, tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER, n_init: int = 1) -> MdsSolution:
    """
    Minimize weighted stress with SMACOF.

    Args:
        problem: the dissimilarities, weights and target dimension.
        init: optional n x M starting coordinates; when given, ``n_init`` is ignored.
        seed: seed of the random starting coordinates.
        tol: stop once the relative stress decrease falls below this value.
        max_iter: iteration cap per run.
        n_init: number of seeded restarts; the lowest final stress wins and
            ties keep the earliest restart. When every pair carries weight, a
            classical scaling start runs before the random ones.
    """
    problem.validate()
    if not tol > 0:
        raise ValidationError({'tol': f"Tolerance must be positive, got {tol}."})
    if max_iter < 0 or n_init < 1:
        raise ValidationError({'max_iter': "max_iter must be >= 0 and n_init >= 1."})

    V_pinv = pinv_v(problem.weights)

    if init is not None:
        starts = [_check_coordinates(init, problem).copy()]
    else:
        starts = [initial_coordinates(problem.n, problem.n_components, seed, k) for k in range(n_init)]
        if has_complete_weights(problem):
            starts.insert(0, classical_scaling(problem))

    best = None
    for X0 in starts:
        solution = _iterate(X0, problem, V_pinv, tol, max_iter, seed)
        if best is None or solution.stress < best.stress:
            best = solution
    return best
