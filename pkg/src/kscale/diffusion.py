"""Gaussian kernels, their row-stochastic normalization and diffusion-map
embeddings.

The embedding of a dataset is obtained from the spectrum of the transition
matrix P = D^-1 K.  Eigenpairs are computed on the symmetric conjugate
S = D^-1/2 K D^-1/2 (same eigenvalues; right eigenvectors of P recovered as
D^-1/2 v), which keeps everything inside the symmetric solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateKernelError, InvalidInputError, NumericError
from .numerics import _as_matrix, pairwise_sq_dist, sym_eig

__all__ = [
    "KernelPair",
    "Embedding",
    "gaussian_kernel",
    "scaled_kernel",
    "build_kernel_pair",
    "dm_embed",
    "diffusion_distance",
]

# off-diagonal mass below this means the row is numerically disconnected
_DEGENERATE_FLOOR = 1e-300


@dataclass(frozen=True)
class KernelPair:
    """Symmetric affinity matrix plus its row-stochastic normalization.

    ``transition`` has rows summing to one; ``degrees[i]`` is the i-th row
    sum of ``kernel``.  Construction validates row-stochasticity, so every
    kernel built anywhere in the package passes through this check.
    """

    kernel: np.ndarray
    transition: np.ndarray
    degrees: np.ndarray
    epsilon: float | None = None
    scaling: np.ndarray | None = None

    def __post_init__(self):
        rows = self.transition.sum(axis=1)
        err = float(np.abs(rows - 1.0).max())
        if err > 1e-12:
            raise NumericError(f"transition rows deviate from 1 by {err:.3e}")

    @property
    def n_samples(self) -> int:
        return self.kernel.shape[0]


def build_kernel_pair(K: np.ndarray, epsilon: float | None = None,
                      scaling: np.ndarray | None = None) -> KernelPair:
    """Normalize a symmetric affinity matrix into a KernelPair.

    Raises DegenerateKernelError naming the first row whose off-diagonal
    entries have all underflowed.
    """
    off_max = (K - np.diag(np.diag(K))).max(axis=1)
    dead = np.flatnonzero(off_max < _DEGENERATE_FLOOR)
    if dead.size and K.shape[0] > 1:
        raise DegenerateKernelError(
            f"kernel row {int(dead[0])} has no off-diagonal mass "
            f"({dead.size} such rows); bandwidth is below the connectivity floor")
    degrees = K.sum(axis=1)
    P = K / degrees[:, None]
    return KernelPair(kernel=K, transition=P, degrees=degrees,
                      epsilon=epsilon, scaling=scaling)


def gaussian_kernel(X, epsilon: float) -> KernelPair:
    """K_ij = exp(-||x_i - x_j||^2 / (2 eps)) and its row normalization."""
    X = _as_matrix(X)
    if not (np.isscalar(epsilon) and np.isfinite(epsilon) and epsilon > 0):
        raise InvalidInputError(f"epsilon must be positive, got {epsilon!r}")
    sq = pairwise_sq_dist(X)
    K = np.exp(-sq / (2.0 * float(epsilon)))
    return build_kernel_pair(K, epsilon=float(epsilon))


def scaled_kernel(X, scaling, epsilon: float) -> KernelPair:
    """Gaussian kernel of diagonally rescaled features.

    ``scaling`` holds the positive diagonal of the feature-weight matrix, so
    K_ij = exp(-(x_i - x_j)^T A^T A (x_i - x_j) / (2 eps)).  Equivalent to
    ``gaussian_kernel`` on column-scaled data.
    """
    X = _as_matrix(X)
    A = np.asarray(scaling, dtype=float).ravel()
    if A.shape[0] != X.shape[1]:
        raise InvalidInputError(f"scaling has {A.shape[0]} entries for {X.shape[1]} features")
    if not np.all(np.isfinite(A)) or np.any(A <= 0):
        raise InvalidInputError("scaling entries must be positive and finite")
    kp = gaussian_kernel(X * A[None, :], epsilon)
    return KernelPair(kernel=kp.kernel, transition=kp.transition,
                      degrees=kp.degrees, epsilon=kp.epsilon, scaling=A)


@dataclass(frozen=True)
class Embedding:
    """Diffusion coordinates: column m of ``coords`` is lambda_m * psi_m.

    ``eigenvalues`` is the full descending spectrum of P (trivial unit
    eigenvalue first); ``vectors`` holds the recovered right eigenvectors
    psi_0 .. psi_d (the trivial one included, coords exclude it); indexing
    of diffusion coordinates is 1-based to mirror psi_1 .. psi_d.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    coords: np.ndarray
    epsilon: float | None
    dim: int
    flags: list = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return self.coords.shape[0]


def dm_embed(kp: KernelPair, dim: int) -> Embedding:
    """Top-``dim`` nontrivial diffusion coordinates of a kernel pair."""
    n = kp.n_samples
    if not 1 <= dim <= n - 1:
        raise InvalidInputError(f"dim={dim} out of range for {n} samples")
    inv_sqrt_deg = 1.0 / np.sqrt(kp.degrees)
    S = kp.kernel * inv_sqrt_deg[:, None] * inv_sqrt_deg[None, :]
    eig = sym_eig(S)
    lam = eig.values
    if abs(lam[0] - 1.0) > 1e-9:
        raise NumericError(f"leading eigenvalue is {lam[0]!r}, expected 1")
    if lam[-1] < -1.0 - 1e-9 or lam[0] > 1.0 + 1e-9:
        raise NumericError("transition spectrum escapes [-1, 1]")
    psi = eig.vectors[:, : dim + 1] * inv_sqrt_deg[:, None]
    coords = psi[:, 1:] * lam[1 : dim + 1][None, :]
    return Embedding(eigenvalues=lam, vectors=psi, coords=coords,
                     epsilon=kp.epsilon, dim=dim)


def diffusion_distance(emb: Embedding, i: int, j: int) -> float:
    """Squared distance between two samples in diffusion coordinates,
    i.e. sum_m lambda_m^2 (psi_m(i) - psi_m(j))^2 over the retained m."""
    n = emb.n_samples
    if not (0 <= i < n and 0 <= j < n):
        raise InvalidInputError(f"indices ({i}, {j}) out of range for {n} samples")
    diff = emb.coords[i] - emb.coords[j]
    return float(diff @ diff)
