"""Feature scaling for manifold learning: pick a diagonal feature weighting
and bandwidth so that the dimension implied by the kernel sum matches an
independent intrinsic-dimension estimate.

The kernel-implied dimension is twice the log-log slope of the total kernel
mass S(eps) = sum_ij exp(-r_ij / (2 eps)) with r_ij the weighted squared
distances; in closed form

    d_eps = [sum_ij r_ij e^(-r_ij / 2 eps)] / [eps * sum_ij e^(-r_ij / 2 eps)].

A greedy pass standardizes the first d_hat features, then appends one
feature at a time, grid-searching that feature's weight jointly with eps to
keep |d_eps - d_hat| minimal.  Features can be pre-ordered by their
correlation with the leading diffusion coordinates so the informative ones
enter first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .baselines import maxmin_scale
from .diffusion import dm_embed, gaussian_kernel
from .errors import InvalidInputError
from .intrinsic import danco
from .numerics import _as_matrix, pairwise_sq_dist, pearson_corr

__all__ = [
    "ManifoldScaling",
    "scaled_kernel_sum",
    "kernel_dimension",
    "optimize_pair",
    "manifold_feature_scaling",
    "correlation_feature_permutation",
]

# exp(x) underflows to 0 below roughly -745; clamp keeps numpy quiet
_EXP_FLOOR = -745.0


def _weighted_sq(X: np.ndarray, scaling) -> np.ndarray:
    A = np.asarray(scaling, dtype=float).ravel()
    if A.shape[0] != X.shape[1]:
        raise InvalidInputError(f"scaling has {A.shape[0]} entries for {X.shape[1]} features")
    if np.any(A <= 0) or not np.all(np.isfinite(A)):
        raise InvalidInputError("scaling entries must be positive and finite")
    return pairwise_sq_dist(X * A[None, :])


def scaled_kernel_sum(X, scaling, epsilon: float) -> float:
    """S(eps) = sum_ij exp(-r_ij(A) / (2 eps)), diagonal included."""
    X = _as_matrix(X)
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    return _kernel_sum_from_sq(_weighted_sq(X, scaling), epsilon)


def _kernel_sum_from_sq(sq: np.ndarray, epsilon: float) -> float:
    return float(np.exp(np.maximum(-sq / (2.0 * epsilon), _EXP_FLOOR)).sum())


def kernel_dimension(X, scaling, epsilon: float) -> float:
    """Kernel-implied dimension d_eps, i.e. 2 eps * d log S / d eps."""
    X = _as_matrix(X)
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    return _kernel_dimension_from_sq(_weighted_sq(X, scaling), epsilon)


def _kernel_dimension_from_sq(sq: np.ndarray, epsilon: float) -> float:
    w = np.exp(np.maximum(-sq / (2.0 * epsilon), _EXP_FLOOR))
    num = float((sq * w).sum())
    den = float(epsilon * w.sum())
    if num == 0.0:
        if sq.max() == 0.0:
            warnings.warn("all pairwise distances are zero; d_eps = 0", stacklevel=3)
        return 0.0
    return num / den


def _default_grids(sq_identity: np.ndarray, grid_points: int):
    a_grid = np.geomspace(1e-3, 1e3, grid_points)
    n = sq_identity.shape[0]
    m = float(np.median(sq_identity[np.triu_indices(n, 1)])) if n > 1 else 1.0
    if m <= 0:
        m = 1.0
    eps_grid = np.geomspace(1e-3 * m, 1e3 * m, grid_points)
    return a_grid, eps_grid


def optimize_pair(view, d_hat: float, a_grid=None, eps_grid=None,
                  grid_points: int = 32) -> tuple[float, float, float]:
    """Exhaustive search for the last feature's weight and the bandwidth.

    All columns of ``view`` except the last are held at weight 1.  Returns
    (weight, epsilon, objective) minimizing |d_eps - d_hat|; exact ties go
    to the smaller epsilon, then the smaller weight.
    """
    view = _as_matrix(view, "view")
    if view.shape[1] < 1:
        raise InvalidInputError("view needs at least one column")
    base = view[:, :-1]
    feat = view[:, -1:]
    sq_base = pairwise_sq_dist(base) if base.shape[1] else np.zeros((view.shape[0],) * 2)
    sq_feat = pairwise_sq_dist(feat)
    if a_grid is None or eps_grid is None:
        da, de = _default_grids(sq_base + sq_feat, grid_points)
        a_grid = da if a_grid is None else np.asarray(a_grid, dtype=float)
        eps_grid = de if eps_grid is None else np.asarray(eps_grid, dtype=float)
    else:
        a_grid = np.asarray(a_grid, dtype=float)
        eps_grid = np.asarray(eps_grid, dtype=float)
    if a_grid.size == 0 or eps_grid.size == 0:
        raise InvalidInputError("grids must be nonempty")
    if np.any(a_grid <= 0) or np.any(eps_grid <= 0):
        raise InvalidInputError("grids must be positive")

    best: tuple[float, float, float] | None = None  # (objective, eps, a)
    for a in a_grid:
        sq = sq_base + (a * a) * sq_feat
        for eps in eps_grid:
            obj = abs(_kernel_dimension_from_sq(sq, float(eps)) - d_hat)
            key = (obj, float(eps), float(a))
            if best is None or key < best:
                best = key
    return best[2], best[1], best[0]


@dataclass
class ManifoldScaling:
    """Result of the greedy feature-scaling pass.

    ``scaling`` is indexed by the original feature order and satisfies
    kernel(X * scaling, epsilon) == kernel of the final normalized view at
    bandwidth 1.  ``trace`` records, per appended feature, the original
    feature index, the chosen weight and bandwidth, and the objective.
    """

    scaling: np.ndarray
    epsilon: float
    d_hat: int
    d_eps_final: float
    objective: float
    trace: list = field(default_factory=list)
    permutation: np.ndarray | None = None
    flags: list = field(default_factory=list)


def manifold_feature_scaling(X, ell: int = 10, seed: int = 0, permute: bool = True,
                             d_hat: int | None = None, a_grid=None, eps_grid=None,
                             grid_points: int = 32) -> ManifoldScaling:
    """Greedy joint selection of per-feature weights and bandwidth.

    Steps: estimate d_hat (unless supplied), optionally reorder features by
    embedding correlation, standardize the first d_hat features, then for
    each remaining feature solve the two-parameter search and fold the
    chosen weight and 1/sqrt(eps) into the accumulated view.  The reported
    epsilon is the last iteration's.
    """
    X = _as_matrix(X)
    n, n_feat = X.shape
    flags: list[str] = []
    if d_hat is None:
        d_hat = danco(X, ell=ell, seed=seed).d_hat
    d_hat = int(d_hat)
    if not 1 <= d_hat <= n_feat:
        raise InvalidInputError(f"d_hat={d_hat} out of range for {n_feat} features")

    if permute:
        perm = correlation_feature_permutation(X, ell=ell, seed=seed, d_hat=d_hat)
    else:
        perm = np.arange(n_feat)
    Xp = X[:, perm]

    head = Xp[:, :d_hat]
    sd = head.std(axis=0)
    zero_sd = np.flatnonzero(sd == 0)
    if zero_sd.size:
        flags.extend(f"constant leading feature {int(perm[j])} scaled by 1" for j in zero_sd)
        sd = np.where(sd == 0, 1.0, sd)
    view = (head - head.mean(axis=0)) / sd

    # cumulative per-feature scale of the current view, in permuted order
    cumulative = np.ones(n_feat)
    cumulative[:d_hat] = 1.0 / sd
    epsilon = 1.0
    trace: list[dict] = []
    for l in range(d_hat, n_feat):
        candidate = np.column_stack([view, Xp[:, l]])
        a, epsilon, objective = optimize_pair(candidate, d_hat, a_grid=a_grid,
                                              eps_grid=eps_grid, grid_points=grid_points)
        view = np.column_stack([view, Xp[:, l] * a]) / np.sqrt(epsilon)
        cumulative[:l] /= np.sqrt(epsilon)
        cumulative[l] = a / np.sqrt(epsilon)
        trace.append({"feature": int(perm[l]), "weight": float(a),
                      "epsilon": float(epsilon), "objective": float(objective)})

    # undo the final division so kernel(X * scaling, epsilon) reproduces the view
    scaling_perm = cumulative * np.sqrt(epsilon)
    scaling = np.empty(n_feat)
    scaling[perm] = scaling_perm
    d_eps_final = _kernel_dimension_from_sq(_weighted_sq(X, scaling), epsilon)
    return ManifoldScaling(scaling=scaling, epsilon=float(epsilon), d_hat=d_hat,
                           d_eps_final=float(d_eps_final),
                           objective=abs(d_eps_final - d_hat),
                           trace=trace, permutation=perm, flags=flags)


def correlation_feature_permutation(X, ell: int = 10, seed: int = 0,
                                    d_hat: int | None = None) -> np.ndarray:
    """Order features by summed absolute correlation with the leading
    diffusion coordinates, most correlated first.

    The embedding uses the max-min bandwidth; constant features score 0 and
    sort last.  Ties keep the original feature order.
    """
    X = _as_matrix(X)
    n, n_feat = X.shape
    if n < 3:
        raise InvalidInputError("need at least 3 samples")
    if n_feat == 1:
        return np.arange(1)
    if d_hat is None:
        d_hat = danco(X, ell=ell, seed=seed).d_hat
    d_hat = int(min(d_hat, n - 2))
    eps = maxmin_scale(X).epsilon
    emb = dm_embed(gaussian_kernel(X, eps), d_hat)
    scores = np.zeros(n_feat)
    for i in range(n_feat):
        scores[i] = sum(abs(pearson_corr(X[:, i], emb.coords[:, l]))
                        for l in range(d_hat))
    return np.argsort(-scores, kind="stable")
