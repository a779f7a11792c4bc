"""Pre-existing bandwidth selectors used as comparison baselines:
standard-deviation feature scaling, the max-min rule, the kernel-sum
linear-range rule (Singer) and local scaling (Zelnik-Manor).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffusion import KernelPair, build_kernel_pair
from .errors import InvalidInputError, SelectionFailedError
from .numerics import _as_matrix, knn_indices, median_sq_dist, pairwise_sq_dist

__all__ = [
    "ScaleSelection",
    "std_scaling",
    "maxmin_scale",
    "kernel_sum_curve",
    "singer_grid",
    "singer_range",
    "zelnik_scales",
    "zelnik_kernel",
]


@dataclass
class ScaleSelection:
    """Outcome of a scale-selection method.

    ``epsilon`` is the scalar used downstream; range methods also fill
    ``eps_range``; feature-scaling methods fill ``scaling``; local-scaling
    fills ``local_sigmas``.  ``curve`` holds (epsilon, score) rows when the
    method sweeps a grid.
    """

    method: str
    epsilon: float | None = None
    eps_range: tuple[float, float] | None = None
    scaling: np.ndarray | None = None
    local_sigmas: np.ndarray | None = None
    curve: np.ndarray | None = None
    slope: float | None = None
    flags: list = field(default_factory=list)


def std_scaling(X, inverse: bool = False) -> ScaleSelection:
    """Per-feature standard-deviation scaling with epsilon = 1.

    The plain variant multiplies each feature by its population standard
    deviation; ``inverse=True`` divides instead (conventional
    standardization).  Both are reported because the written rule and common
    practice disagree; constant features get scale 1 and a flag.
    """
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 samples")
    sd = X.std(axis=0)  # population (1/N) normalization
    flags = [f"constant feature {l} scaled by 1" for l in np.flatnonzero(sd == 0)]
    sd = np.where(sd == 0, 1.0, sd)
    A = 1.0 / sd if inverse else sd.copy()
    return ScaleSelection(method="std-inverse" if inverse else "std",
                          epsilon=1.0, scaling=A, flags=flags)


def maxmin_scale(X, c: float = 2.0) -> ScaleSelection:
    """epsilon = c * max_j min_{i != j} ||x_i - x_j||^2 (c in [2, 3])."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise InvalidInputError("need at least 2 samples")
    if not c > 0:
        raise InvalidInputError(f"c must be positive, got {c!r}")
    sq = pairwise_sq_dist(X)
    np.fill_diagonal(sq, np.inf)
    eps = float(c * sq.min(axis=1).max())
    return ScaleSelection(method="maxmin", epsilon=eps)


def singer_grid(X, count: int = 64, lo_factor: float = 1e-4,
                hi_factor: float = 1e4) -> np.ndarray:
    """Log-spaced epsilon grid around the median squared distance, wide
    enough to reach both kernel-sum asymptotes."""
    m = median_sq_dist(X)
    if m <= 0:
        raise InvalidInputError("all samples identical; no distance scale")
    return np.geomspace(lo_factor * m, hi_factor * m, count)


def kernel_sum_curve(X, grid) -> np.ndarray:
    """Total kernel mass L(eps) = sum_ij K_ij per grid point.

    Returns rows (eps, L).  L runs from N (identity limit) to N^2 (all-ones
    limit) and is strictly increasing for any dataset with two distinct
    points.
    """
    X = _as_matrix(X)
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise InvalidInputError("empty epsilon grid")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise InvalidInputError("grid must be positive and strictly ascending")
    sq = pairwise_sq_dist(X)
    out = np.empty((grid.size, 2))
    for i, eps in enumerate(grid):
        out[i] = (eps, float(np.exp(-sq / (2.0 * eps)).sum()))
    return out


def singer_range(curve) -> ScaleSelection:
    """Maximal linear range of log L vs log eps.

    Local slopes come from central differences; the range is the longest
    contiguous run of grid points whose slope is at least 80% of the global
    maximum slope.  ``epsilon`` is the lower edge of the range (the scalar
    used downstream); ``slope`` is the least-squares slope inside the range,
    which approximates half the intrinsic dimension.
    """
    curve = np.asarray(curve, dtype=float)
    if curve.ndim != 2 or curve.shape[1] != 2:
        raise InvalidInputError("curve must be (eps, L) rows")
    eps, L = curve[:, 0], curve[:, 1]
    if eps.size < 8:
        raise InvalidInputError("need at least 8 grid points")
    if eps[-1] / eps[0] < 1e4 * (1 - 1e-9):
        raise InvalidInputError("grid must span at least 4 decades")
    if np.any(eps <= 0) or np.any(L <= 0):
        raise InvalidInputError("curve values must be positive")
    le, ll = np.log(eps), np.log(L)
    slopes = np.gradient(ll, le)
    smax = float(slopes.max())
    if smax <= 1e-12:
        raise SelectionFailedError("kernel-sum curve is flat; no linear range")
    keep = slopes >= 0.8 * smax
    best = None
    start = None
    for i, flag in enumerate(np.append(keep, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if best is None or (i - start) > (best[1] - best[0] + 1):
                best = (start, i - 1)
            start = None
    if best is None or best[1] - best[0] + 1 < 3:
        raise SelectionFailedError("no linear run of length >= 3 found")
    a, b = best
    x, y = le[a : b + 1], ll[a : b + 1]
    fit_slope = float(np.polyfit(x, y, 1)[0])
    return ScaleSelection(method="singer", epsilon=float(eps[a]),
                          eps_range=(float(eps[a]), float(eps[b])),
                          curve=curve, slope=fit_slope)


def zelnik_scales(X, r: int = 7) -> ScaleSelection:
    """Local scale sigma_i = distance to the r-th nearest neighbor.

    Duplicated points produce sigma_i = 0; those are replaced by the
    smallest positive sigma and flagged.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if not 1 <= r <= n - 1:
        raise InvalidInputError(f"r={r} out of range for {n} samples")
    nn = knn_indices(X, r)
    sq = pairwise_sq_dist(X)
    sigmas = np.sqrt(sq[np.arange(n), nn[:, r - 1]])
    flags = []
    if np.any(sigmas == 0):
        positive = sigmas[sigmas > 0]
        if positive.size == 0:
            raise InvalidInputError("all local scales are zero (identical samples)")
        fill = float(positive.min())
        flags = [f"sigma[{i}] = 0 replaced by {fill!r}" for i in np.flatnonzero(sigmas == 0)]
        sigmas = np.where(sigmas == 0, fill, sigmas)
    return ScaleSelection(method="zelnik", local_sigmas=sigmas, flags=flags)


def zelnik_kernel(X, local_sigmas) -> KernelPair:
    """Locally scaled kernel K_ij = exp(-||x_i - x_j||^2 / (sigma_i sigma_j))."""
    X = _as_matrix(X)
    sig = np.asarray(local_sigmas, dtype=float).ravel()
    if sig.shape[0] != X.shape[0]:
        raise InvalidInputError("one sigma per sample required")
    if np.any(sig <= 0):
        raise InvalidInputError("local sigmas must be positive")
    sq = pairwise_sq_dist(X)
    K = np.exp(-sq / (sig[:, None] * sig[None, :]))
    return build_kernel_pair(K)
