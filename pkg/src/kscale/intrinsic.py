"""Intrinsic-dimension estimation from norm and angle concentration (DANCo).

The estimator fits two statistics of local neighborhoods: the normalized
closest distance rho (whose density for points uniform on a d-dimensional
ball is g(rho; ell, d) = ell * d * rho^(d-1) * (1 - rho^d)^(ell-1)) and the
von Mises concentration of pairwise neighbor angles.  Each candidate
dimension d is calibrated against a synthetic sample from the solid unit
d-ball, and the dimension minimizing the summed Kullback-Leibler divergence
between observed and calibrated fits wins.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import i0e, i1e

from .errors import InvalidInputError
from .numerics import _as_matrix, make_rng, pairwise_sq_dist

__all__ = [
    "DancoStats",
    "DimEstimate",
    "distance_pdf",
    "distance_cdf",
    "distance_ppf",
    "normalized_closest_distance",
    "ml_dimension",
    "neighbor_angles",
    "vm_fit",
    "sample_unit_ball",
    "danco",
]

_TAU_CAP = 1e6
_RHO_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# normalized-distance density g and friends

def distance_pdf(rho, ell: int, d: float):
    """Density of the normalized closest distance on (0, 1)."""
    rho = np.asarray(rho, dtype=float)
    return ell * d * rho ** (d - 1.0) * (1.0 - rho**d) ** (ell - 1.0)


def distance_cdf(rho, ell: int, d: float):
    rho = np.asarray(rho, dtype=float)
    return 1.0 - (1.0 - rho**d) ** ell


def distance_ppf(u, ell: int, d: float):
    """Inverse CDF, handy for sampling rho by inversion."""
    u = np.asarray(u, dtype=float)
    return (1.0 - (1.0 - u) ** (1.0 / ell)) ** (1.0 / d)


def normalized_closest_distance(X, ell: int) -> np.ndarray:
    """rho_i = (distance to nearest neighbor) / (distance to the farthest of
    the ell+1 nearest neighbors), one value per sample.

    Exact duplicates would give rho = 0 (or 0/0); such entries are clamped
    to a tiny positive value and flagged with a warning so downstream logs
    stay finite.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if ell + 1 > n - 1:
        raise InvalidInputError(f"need ell + 2 <= N samples (ell={ell}, N={n})")
    rho, _ = _rho_and_neighbors(X, ell)[:2]
    return rho


def _rho_and_neighbors(X, ell: int):
    """Shared neighbor machinery: rho vector, (ell+1)-neighbor index table,
    plain distances, and any degeneracy flags."""
    n = X.shape[0]
    sq = pairwise_sq_dist(X)
    dist = np.sqrt(sq)
    nn = np.empty((n, ell + 1), dtype=np.intp)
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")
        nn[i] = order[order != i][: ell + 1]
    d_near = dist[np.arange(n), nn[:, 0]]
    d_far = dist[np.arange(n), nn[:, ell]]
    flags = []
    bad = d_far == 0
    if np.any(bad):
        flags.append(f"{int(bad.sum())} neighborhoods collapsed to duplicates")
        d_far = np.where(bad, 1.0, d_far)
        d_near = np.where(bad, _RHO_FLOOR, d_near)
    rho = d_near / d_far
    zero = rho <= 0
    if np.any(zero):
        flags.append(f"{int(zero.sum())} rho values clamped to {_RHO_FLOOR}")
        rho = np.where(zero, _RHO_FLOOR, rho)
    if flags:
        warnings.warn("; ".join(flags), stacklevel=3)
    return rho, nn, dist, flags


def ml_dimension(rho, ell: int, d_max: float = 1000.0) -> float:
    """Maximum-likelihood dimension for observed normalized distances.

    Maximizes N log(ell d) + (d-1) sum log rho + (ell-1) sum log(1 - rho^d)
    over real d in [1, d_max] by golden-section search (absolute tolerance
    1e-6).  A maximum pinned at either boundary is flagged with a warning.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    if rho.size == 0:
        raise InvalidInputError("empty rho vector")
    if np.any(rho <= 0) or np.any(rho >= 1):
        raise InvalidInputError("rho values must lie strictly inside (0, 1)")
    if ell < 1:
        raise InvalidInputError("ell must be >= 1")
    if d_max <= 1:
        raise InvalidInputError("d_max must exceed 1")
    log_rho = np.log(rho)
    sum_log_rho = float(log_rho.sum())
    n = rho.size

    def loglik(d: float) -> float:
        return (n * np.log(ell * d) + (d - 1.0) * sum_log_rho
                + (ell - 1.0) * float(np.log1p(-np.exp(d * log_rho)).sum()))

    d_star = _golden_max(loglik, 1.0, float(d_max), tol=1e-6)
    if d_star - 1.0 < 1e-5 or float(d_max) - d_star < 1e-5:
        warnings.warn(f"likelihood maximized at search boundary (d={d_star:.6f})",
                      stacklevel=2)
    return d_star


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


# ---------------------------------------------------------------------------
# angles and the von Mises fit

def neighbor_angles(X, i: int, ell: int) -> np.ndarray:
    """All C(ell, 2) angles between centered neighbor vectors of sample i.

    Pairs involving a zero-length centered vector (duplicates of x_i) are
    skipped with a warning.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if not 0 <= i < n:
        raise InvalidInputError(f"index {i} out of range")
    if ell < 2:
        raise InvalidInputError("need ell >= 2 for pairwise angles")
    if ell > n - 1:
        raise InvalidInputError(f"ell={ell} too large for {n} samples")
    diff = X - X[i]
    order = np.argsort(np.einsum("ij,ij->i", diff, diff), kind="stable")
    nbrs = order[order != i][:ell]
    centered = X[nbrs] - X[i]
    norms = np.linalg.norm(centered, axis=1)
    good = norms > 0
    if not np.all(good):
        warnings.warn(f"skipped {int((~good).sum())} zero-length neighbor vectors",
                      stacklevel=2)
    unit = centered[good] / norms[good, None]
    gram = np.clip(unit @ unit.T, -1.0, 1.0)
    iu = np.triu_indices(unit.shape[0], 1)
    return np.arccos(gram[iu])


def vm_fit(theta) -> tuple[float, float]:
    """Maximum-likelihood von Mises fit: mean direction and concentration.

    nu = atan2(sum sin, sum cos); tau solves I1(tau)/I0(tau) = Rbar via
    Newton iteration from the standard three-regime seed.  Nearly collapsed
    samples (Rbar ~ 1) cap tau at 1e6 with a warning.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size < 2:
        raise InvalidInputError("need at least 2 angles")
    s, c = float(np.sin(theta).sum()), float(np.cos(theta).sum())
    nu = float(np.arctan2(s, c))
    rbar = np.hypot(s, c) / theta.size
    tau = float(_tau_from_rbar(np.array([rbar]))[0])
    if tau >= _TAU_CAP:
        warnings.warn("resultant length ~ 1; concentration capped at 1e6",
                      stacklevel=2)
    return nu, tau


def _tau_from_rbar(rbar: np.ndarray) -> np.ndarray:
    """Vectorized inverse of A(tau) = I1(tau)/I0(tau)."""
    r = np.clip(np.asarray(rbar, dtype=float), 0.0, 1.0)
    tau = np.where(
        r < 0.53,
        2.0 * r + r**3 + 5.0 * r**5 / 6.0,
        np.where(r < 0.85,
                 -0.4 + 1.39 * r + 0.43 / np.maximum(1.0 - r, 1e-300),
                 1.0 / np.maximum(r**3 - 4.0 * r**2 + 3.0 * r, 1e-300)),
    )
    capped = r >= 1.0 - 1e-12
    active = ~capped & (r > 0)
    tau = np.where(capped, _TAU_CAP, np.where(active, tau, 0.0))
    for _ in range(50):
        t = np.where(active, np.maximum(tau, 1e-12), 1.0)
        a = i1e(t) / i0e(t)
        da = 1.0 - a * a - a / t
        step = np.where(active & (np.abs(da) > 1e-300), (a - r) / da, 0.0)
        new = np.clip(t - step, 1e-12, _TAU_CAP)
        moved = np.abs(new - t)
        tau = np.where(active, new, tau)
        active = active & (moved > 1e-12 * np.maximum(1.0, new))
        if not np.any(active):
            break
    return tau


def sample_unit_ball(d: int, n: int, rng) -> np.ndarray:
    """n points uniform in the solid unit d-ball (normalized Gaussian
    direction, radius u^(1/d))."""
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = make_rng(rng)
    g = rng.standard_normal((n, d))
    norms = np.linalg.norm(g, axis=1)
    norms = np.where(norms == 0, 1.0, norms)
    radii = rng.random(n) ** (1.0 / d)
    return g / norms[:, None] * radii[:, None]


# ---------------------------------------------------------------------------
# the full pipeline

@dataclass(frozen=True)
class DancoStats:
    """Fitted statistics of one dataset: the ML dimension of the normalized
    distances, circular-mean von Mises direction, mean concentration, and
    the raw rho values."""

    d_ml: float
    nu_mean: float
    tau_mean: float
    rho: np.ndarray
    ell: int
    flags: tuple = ()


@dataclass(frozen=True)
class DimEstimate:
    """Final estimate: ``d_hat`` minimizes the summed KL divergence; the
    full curve and per-candidate calibration fits are retained."""

    d_hat: int
    kl_curve: list
    data_stats: DancoStats
    calibration_stats: dict
    seed: int
    notes: tuple = ()


def _dataset_stats(X: np.ndarray, ell: int) -> DancoStats:
    n, dim = X.shape
    rho, nn, dist, flags = _rho_and_neighbors(X, ell)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d_ml = ml_dimension(rho, ell, d_max=10.0 * dim)

    nbrs = X[nn[:, :ell]] - X[:, None, :]          # (n, ell, dim)
    norms = np.linalg.norm(nbrs, axis=2)
    valid = norms > 0
    safe = np.where(valid, norms, 1.0)
    unit = nbrs / safe[:, :, None]
    gram = np.clip(np.einsum("nld,nmd->nlm", unit, unit), -1.0, 1.0)
    theta = np.arccos(gram)
    pair_ok = (valid[:, :, None] & valid[:, None, :]
               & np.triu(np.ones((ell, ell), dtype=bool), 1)[None, :, :])
    s = np.where(pair_ok, np.sin(theta), 0.0).sum(axis=(1, 2))
    c = np.where(pair_ok, np.cos(theta), 0.0).sum(axis=(1, 2))
    cnt = pair_ok.sum(axis=(1, 2))
    ok = cnt > 0
    if not np.all(ok):
        flags = list(flags) + [f"{int((~ok).sum())} samples without usable angle pairs"]
    rbar = np.hypot(s[ok], c[ok]) / cnt[ok]
    nu_i = np.arctan2(s[ok], c[ok])
    tau_i = _tau_from_rbar(rbar)
    nu_mean = float(np.arctan2(np.sin(nu_i).mean(), np.cos(nu_i).mean()))
    tau_mean = float(tau_i.mean())
    return DancoStats(d_ml=float(d_ml), nu_mean=nu_mean, tau_mean=tau_mean,
                      rho=rho, ell=ell, flags=tuple(flags))


def _kl_distance(ell: int, d1: float, d2: float) -> float:
    """KL(g(.; ell, d1) || g(.; ell, d2)) by adaptive quadrature on (0, 1)."""

    def integrand(rho: float) -> float:
        rho = min(max(rho, 1e-300), 1.0 - 1e-16)
        g1 = distance_pdf(rho, ell, d1)
        if g1 < 1e-300:
            return 0.0
        log_g1 = (np.log(ell * d1) + (d1 - 1.0) * np.log(rho)
                  + (ell - 1.0) * np.log1p(-(rho**d1)))
        log_g2 = (np.log(ell * d2) + (d2 - 1.0) * np.log(rho)
                  + (ell - 1.0) * np.log1p(-(rho**d2)))
        return float(g1 * (log_g1 - log_g2))

    with warnings.catch_warnings():
        # log-singular but integrable at rho -> 0; QUADPACK warns yet converges
        warnings.simplefilter("ignore")
        value, _ = quad(integrand, 0.0, 1.0, epsabs=1e-8, limit=200)
    return float(value)


def _kl_von_mises(nu1: float, tau1: float, nu2: float, tau2: float) -> float:
    """Closed-form KL between two von Mises laws."""
    log_i0_ratio = (np.log(i0e(tau2)) + tau2) - (np.log(i0e(tau1)) + tau1)
    a1 = i1e(tau1) / i0e(tau1)
    return float(log_i0_ratio + (tau1 - tau2 * np.cos(nu1 - nu2)) * a1)


def danco(X, ell: int = 10, seed: int = 0, d_max: int | None = None) -> DimEstimate:
    """Estimate the intrinsic dimension of a dataset.

    For each candidate dimension d = 1 .. d_max a calibration set of the
    same size is drawn from the solid unit d-ball with a stream derived from
    (seed, d), the distance and angle statistics are refitted, and the
    candidate with the smallest total KL divergence wins (smallest d on
    ties).  ``d_max`` defaults to the ambient dimension and must be supplied
    explicitly when that exceeds 50.
    """
    X = _as_matrix(X)
    n, dim = X.shape
    if ell < 2:
        raise InvalidInputError("ell must be >= 2")
    if ell + 1 > n - 1:
        raise InvalidInputError(f"need ell + 2 <= N samples (ell={ell}, N={n})")
    if d_max is None:
        if dim > 50:
            raise InvalidInputError(
                "ambient dimension exceeds 50; pass d_max to bound the candidate range")
        d_max = dim
    d_max = int(min(d_max, dim))
    if d_max < 1:
        raise InvalidInputError("d_max must be >= 1")

    data_stats = _dataset_stats(X, ell)
    kl_curve: list[tuple[int, float]] = []
    calibration: dict[int, DancoStats] = {}
    for d in range(1, d_max + 1):
        Y = sample_unit_ball(d, n, make_rng(seed, d))
        cal = _dataset_stats(Y, ell)
        calibration[d] = cal
        kl = (_kl_distance(ell, data_stats.d_ml, cal.d_ml)
              + _kl_von_mises(data_stats.nu_mean, data_stats.tau_mean,
                              cal.nu_mean, cal.tau_mean))
        kl_curve.append((d, float(kl)))
    best = min(kl_curve, key=lambda item: (item[1], item[0]))
    return DimEstimate(d_hat=int(best[0]), kl_curve=kl_curve,
                       data_stats=data_stats, calibration_stats=calibration,
                       seed=int(seed),
                       notes=("calibration sets drawn uniformly from the solid unit ball",))
