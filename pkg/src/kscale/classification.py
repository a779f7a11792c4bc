"""Bandwidth selection criteria for labeled data.

Three scores over an epsilon grid:

* ``embedding_scatter_ratio`` (method id "rho_psi"): global embedding
  scatter over summed within-class scatter; large when classes are tight
  and far apart in diffusion coordinates.
* ``generalized_eigengap`` (method id "ge"): one minus the (N_C + 1)-th
  largest eigenvalue of the transition matrix.  Note it tends to 1 as the
  kernel approaches the rank-one all-ones limit, which is why sweep grids
  are capped well below that regime.
* ``within_class_transition`` (method id "rho_p"): total within-class mass
  of the transition matrix after removing self-transitions, divided by N.
  The ``renormalize`` variant rescales each zero-diagonal row to sum one
  first, turning the score into the within-class fraction of moved mass
  (that variant makes the cut/mass complement identity exact).

Plus the separation diagnostics ``class_gap`` and ``class_width``.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diffusion import dm_embed, gaussian_kernel
from .errors import InvalidInputError, NumericError, SelectionFailedError
from .numerics import _as_matrix, median_sq_dist, pairwise_sq_dist, sym_eig

__all__ = [
    "LabeledDataset",
    "CriterionCurve",
    "embedding_scatter_ratio",
    "generalized_eigengap",
    "within_class_transition",
    "class_gap",
    "class_width",
    "sweep_grid",
    "criterion_sweep",
    "SWEEP_METHODS",
]


@dataclass(frozen=True)
class LabeledDataset:
    """Sample matrix with integer class labels (one label per row)."""

    X: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _as_matrix(self.X))
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.shape[0] != self.X.shape[0]:
            raise InvalidInputError("labels must be one integer per sample")
        if not np.issubdtype(labels.dtype, np.integer):
            as_int = labels.astype(np.int64)
            if not np.array_equal(as_int, labels):
                raise InvalidInputError("labels must be integers")
            labels = as_int
        object.__setattr__(self, "labels", labels)

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)

    @property
    def n_classes(self) -> int:
        return self.classes.size

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]


def embedding_scatter_ratio(ds: LabeledDataset, epsilon: float,
                            dim: int | None = None) -> float:
    """Global-to-within scatter ratio in the diffusion embedding.

    ``dim`` defaults to the number of classes.  Returns +inf (with a
    warning) when every class collapses to a point in the embedding.
    """
    if dim is None:
        dim = ds.n_classes
    if dim < 1:
        raise InvalidInputError("dim must be >= 1")
    emb = dm_embed(gaussian_kernel(ds.X, epsilon), dim)
    coords = emb.coords
    mu_all = coords.mean(axis=0)
    scatter_all = float(((coords - mu_all) ** 2).sum(axis=1).mean())
    scatter_within = 0.0
    for c in ds.classes:
        member = coords[ds.labels == c]
        mu = member.mean(axis=0)
        scatter_within += float(((member - mu) ** 2).sum(axis=1).mean())
    if scatter_within == 0.0:
        warnings.warn("zero within-class scatter; returning inf", stacklevel=2)
        return float("inf")
    return scatter_all / scatter_within


def generalized_eigengap(ds: LabeledDataset, epsilon: float) -> float:
    """1 minus the (N_C + 1)-th largest transition-matrix eigenvalue
    (the trivial unit eigenvalue counts as the first)."""
    n, n_c = ds.n_samples, ds.n_classes
    if n <= n_c:
        raise InvalidInputError("need more samples than classes")
    kp = gaussian_kernel(ds.X, epsilon)
    inv_sqrt = 1.0 / np.sqrt(kp.degrees)
    S = kp.kernel * inv_sqrt[:, None] * inv_sqrt[None, :]
    values = sym_eig(S).values
    return float(1.0 - values[n_c])


def within_class_transition(ds: LabeledDataset, epsilon: float,
                            renormalize: bool = False) -> float:
    """Within-class transition mass after removing self-transitions.

    Default: (1/N) * sum over same-class pairs i != j of P_ij, with P the
    row-stochastic kernel.  With ``renormalize=True`` each zero-diagonal
    row is rescaled to sum one before summing, giving the within-class
    fraction of non-self mass.  Rows isolated by the diagonal removal are
    excluded (with a warning) from both the sum and the count.
    """
    kp = gaussian_kernel(ds.X, epsilon)
    P = kp.transition.copy()
    np.fill_diagonal(P, 0.0)
    row_mass = P.sum(axis=1)
    keep = row_mass > 0
    if not np.all(keep):
        warnings.warn(f"{int((~keep).sum())} isolated rows excluded", stacklevel=2)
    if not np.any(keep):
        raise NumericError("all rows isolated after removing self-transitions")
    if renormalize:
        P = P[keep] / row_mass[keep, None]
    else:
        P = P[keep]
    same = ds.labels[keep][:, None] == ds.labels[None, :]
    return float(P[same].sum() / keep.sum())


def _sq_dist_masks(points, labels):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    labels = np.asarray(labels)
    if labels.shape[0] != points.shape[0]:
        raise InvalidInputError("labels must match points")
    sq = pairwise_sq_dist(points)
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(labels.shape[0], dtype=bool)
    return sq, same, off


def class_gap(points, labels) -> float:
    """Minimum squared distance between samples of different classes."""
    sq, same, _ = _sq_dist_masks(points, labels)
    cross = ~same
    if not np.any(cross):
        raise InvalidInputError("need at least 2 classes")
    return float(sq[cross].min())


def class_width(points, labels) -> float:
    """Maximum squared distance between samples of the same class."""
    sq, same, off = _sq_dist_masks(points, labels)
    within = same & off
    if not np.any(within):
        return 0.0
    return float(sq[within].max())


@dataclass
class CriterionCurve:
    """Scores of one criterion over an epsilon grid.

    ``argmax_eps`` is the first finite maximum in grid order; +inf
    sentinels win only when no finite score exists.  Failed grid points
    carry a NaN score and are listed in ``failures``.
    """

    method: str
    grid: np.ndarray
    scores: np.ndarray
    argmax_eps: float
    best_index: int
    diagnostics: list = field(default_factory=list)
    failures: list = field(default_factory=list)


SWEEP_METHODS = ("rho_psi", "ge", "rho_p", "rho_p_frac")


def sweep_grid(X, count: int = 40, lo_factor: float = 1e-4,
               hi_factor: float = 1e2) -> np.ndarray:
    """Default classification sweep grid: log-spaced around the median
    squared distance, capped at 100x the median because the eigengap
    saturates in the all-ones-kernel regime beyond that."""
    m = median_sq_dist(X)
    if m <= 0:
        raise InvalidInputError("all samples identical; no distance scale")
    return np.geomspace(lo_factor * m, hi_factor * m, count)


def _evaluate(method: str, ds: LabeledDataset, eps: float, dim: int | None) -> float:
    if method == "rho_psi":
        return embedding_scatter_ratio(ds, eps, dim=dim)
    if method == "ge":
        return generalized_eigengap(ds, eps)
    if method == "rho_p":
        return within_class_transition(ds, eps)
    if method == "rho_p_frac":
        return within_class_transition(ds, eps, renormalize=True)
    raise InvalidInputError(f"unknown sweep method {method!r}")


def criterion_sweep(ds: LabeledDataset, grid, method: str,
                    dim: int | None = None) -> CriterionCurve:
    """Evaluate one criterion on every grid point and pick the argmax.

    Per-point failures (degenerate kernels and the like) are recorded and
    excluded.  Set KSCALE_THREADS > 1 to evaluate grid points in a thread
    pool; the argmax reduction stays in grid order either way.
    """
    if method not in SWEEP_METHODS:
        raise InvalidInputError(f"method must be one of {SWEEP_METHODS}")
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidInputError("empty epsilon grid")

    def one(eps: float):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return _evaluate(method, ds, float(eps), dim), None
        except (NumericError, InvalidInputError) as exc:
            return float("nan"), str(exc)

    n_threads = int(os.environ.get("KSCALE_THREADS", "1") or "1")
    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(eps) for eps in grid]

    scores = np.array([r[0] for r in results])
    failures = [(i, msg) for i, (_, msg) in enumerate(results) if msg is not None]
    finite = np.isfinite(scores)
    if np.any(finite):
        masked = np.where(finite, scores, -np.inf)
        best = int(np.argmax(masked))
    elif np.any(scores == np.inf):
        best = int(np.flatnonzero(scores == np.inf)[0])
    else:
        raise SelectionFailedError(f"no usable {method} score on the grid")
    return CriterionCurve(method=method, grid=grid, scores=scores,
                          argmax_eps=float(grid[best]), best_index=best,
                          failures=failures)
