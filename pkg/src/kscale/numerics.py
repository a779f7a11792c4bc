"""Dense-matrix substrate: distances, symmetric eigendecomposition, k-NN,
Pearson correlation and seeded random generators.

All functions are pure and operate on sample-major arrays (row = sample).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidInputError, NumericError

__all__ = [
    "EigenSystem",
    "make_rng",
    "pairwise_sq_dist",
    "sym_eig",
    "knn_indices",
    "pearson_corr",
    "median_sq_dist",
]


def make_rng(*seed_parts) -> np.random.Generator:
    """Seeded PCG64 generator; identical seed parts give identical streams.

    Extra parts derive independent sub-streams, e.g. ``make_rng(seed, d)``
    for the d-th calibration draw.
    """
    if len(seed_parts) == 1 and isinstance(seed_parts[0], np.random.Generator):
        return seed_parts[0]
    return np.random.default_rng(list(seed_parts))


def _as_matrix(X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {X.shape}")
    if X.size == 0:
        raise InvalidInputError(f"{name} is empty")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return X


def pairwise_sq_dist(X) -> np.ndarray:
    """All-pairs squared Euclidean distances, symmetric with zero diagonal."""
    X = _as_matrix(X)
    sq = cdist(X, X, "sqeuclidean")
    sq = 0.5 * (sq + sq.T)
    np.fill_diagonal(sq, 0.0)
    return sq


def median_sq_dist(X) -> float:
    """Median off-diagonal pairwise squared distance (grid-scale heuristic)."""
    sq = pairwise_sq_dist(X)
    n = sq.shape[0]
    if n < 2:
        raise InvalidInputError("need at least 2 samples")
    return float(np.median(sq[np.triu_indices(n, 1)]))


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending; column j of ``vectors`` is the unit-norm
    eigenvector of ``values[j]``, sign-fixed so its largest-magnitude entry
    is positive."""

    values: np.ndarray
    vectors: np.ndarray


def sym_eig(S) -> EigenSystem:
    """Full decomposition of a symmetric matrix.

    Input must be symmetric to 1e-10 relative tolerance.  Backed by LAPACK's
    symmetric solver; results satisfy ``S @ v = lam * v`` to 1e-9 * ||S||_F.
    """
    S = _as_matrix(S, "S")
    n, m = S.shape
    if n != m:
        raise InvalidInputError(f"matrix is {n}x{m}, not square")
    scale = max(1.0, float(np.abs(S).max()))
    asym = float(np.abs(S - S.T).max())
    if asym > 1e-10 * scale:
        raise InvalidInputError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    try:
        values, vectors = np.linalg.eigh(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"symmetric eigendecomposition failed to converge: {exc}") from exc
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    # deterministic sign: largest-magnitude entry positive
    for j in range(n):
        k = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[k, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return EigenSystem(values=values, vectors=vectors)


def knn_indices(X, k: int) -> np.ndarray:
    """Indices of the k nearest neighbors of every row (self excluded).

    Each row lists k distinct indices sorted by ascending distance, ties
    broken by ascending index.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if not 1 <= k <= n - 1:
        raise InvalidInputError(f"k={k} out of range for {n} samples")
    sq = pairwise_sq_dist(X)
    out = np.empty((n, k), dtype=np.intp)
    for i in range(n):
        order = np.argsort(sq[i], kind="stable")
        out[i] = order[order != i][:k]
    return out


def pearson_corr(a, b) -> float:
    """Pearson correlation coefficient; 0 when either vector is constant."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise InvalidInputError("need at least 2 observations")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInputError("inputs contain non-finite entries")
    ac = a - a.mean()
    bc = b - b.mean()
    ssa = float(ac @ ac)
    ssb = float(bc @ bc)
    if ssa == 0.0 or ssb == 0.0:
        return 0.0
    return float(np.clip((ac @ bc) / np.sqrt(ssa * ssb), -1.0, 1.0))
