"""Scikit-learn style front ends over the functional core, so the embedding
and the scale selectors compose with pipelines and grid search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import baselines, classification, manifold
from .diffusion import dm_embed, gaussian_kernel, scaled_kernel
from .intrinsic import danco

__all__ = ["DiffusionMap", "ScaleSelector", "IntrinsicDimension"]


class DiffusionMap(BaseEstimator):
    """Diffusion-map embedding at a fixed bandwidth.

    Parameters
    ----------
    epsilon : float
        Gaussian kernel bandwidth.
    n_components : int, default=2
        Number of nontrivial diffusion coordinates to keep.
    scaling : array-like of shape (n_features,), optional
        Positive diagonal feature weights applied before the kernel.

    Attributes
    ----------
    embedding_ : ndarray of shape (n_samples, n_components)
    eigenvalues_ : ndarray, full descending transition spectrum
    kernel_ : KernelPair
    """

    def __init__(self, epsilon: float = 1.0, n_components: int = 2, scaling=None):
        self.epsilon = epsilon
        self.n_components = n_components
        self.scaling = scaling

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if self.scaling is not None:
            kp = scaled_kernel(X, np.asarray(self.scaling, dtype=float), self.epsilon)
        else:
            kp = gaussian_kernel(X, self.epsilon)
        emb = dm_embed(kp, self.n_components)
        self.kernel_ = kp
        self.embedding_ = emb.coords
        self.eigenvalues_ = emb.eigenvalues
        self.result_ = emb
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


class ScaleSelector(BaseEstimator):
    """Bandwidth (and optional feature-weight) selection by any method.

    ``method`` is one of: "std", "std-inverse", "maxmin", "singer",
    "zelnik", "manifold", "rho_psi", "ge", "rho_p".  The last three need
    labels in ``fit``.  After fitting, ``epsilon_`` holds the chosen
    bandwidth (None for "zelnik", which selects ``local_sigmas_`` instead)
    and ``scaling_`` the diagonal feature weights when the method produces
    them.
    """

    _supervised = ("rho_psi", "ge", "rho_p")

    def __init__(self, method: str = "maxmin", c: float = 2.0, r: int = 7,
                 ell: int = 10, seed: int = 0, grid_points: int = 40,
                 dim: int | None = None, permute: bool = True):
        self.method = method
        self.c = c
        self.r = r
        self.ell = ell
        self.seed = seed
        self.grid_points = grid_points
        self.dim = dim
        self.permute = permute

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        method = self.method
        self.scaling_ = None
        self.local_sigmas_ = None
        self.curve_ = None
        if method in ("std", "std-inverse"):
            sel = baselines.std_scaling(X, inverse=method == "std-inverse")
            self.epsilon_, self.scaling_ = sel.epsilon, sel.scaling
        elif method == "maxmin":
            sel = baselines.maxmin_scale(X, c=self.c)
            self.epsilon_ = sel.epsilon
        elif method == "singer":
            curve = baselines.kernel_sum_curve(X, baselines.singer_grid(X))
            sel = baselines.singer_range(curve)
            self.epsilon_ = sel.epsilon
            self.curve_ = sel.curve
        elif method == "zelnik":
            sel = baselines.zelnik_scales(X, r=self.r)
            self.epsilon_ = None
            self.local_sigmas_ = sel.local_sigmas
        elif method == "manifold":
            sel = manifold.manifold_feature_scaling(X, ell=self.ell, seed=self.seed,
                                                    permute=self.permute)
            self.epsilon_, self.scaling_ = sel.epsilon, sel.scaling
        elif method in self._supervised:
            if y is None:
                raise ValueError(f"method {method!r} requires labels")
            ds = classification.LabeledDataset(X=X, labels=np.asarray(y))
            grid = classification.sweep_grid(X, count=self.grid_points)
            sel = classification.criterion_sweep(ds, grid, method, dim=self.dim)
            self.epsilon_ = sel.argmax_eps
            self.curve_ = np.column_stack([sel.grid, sel.scores])
        else:
            raise ValueError(f"unknown method {method!r}")
        self.selection_ = sel
        return self

    def transform(self, X):
        """Column-scale X by the selected feature weights (identity when the
        method selects none)."""
        check_is_fitted(self, "selection_")
        X = check_array(X, dtype=float)
        if self.scaling_ is None:
            return X
        return X * np.asarray(self.scaling_)[None, :]


class IntrinsicDimension(BaseEstimator):
    """Intrinsic-dimension estimator (norm plus angle concentration).

    Attributes after ``fit``: ``dimension_`` (the integer estimate),
    ``kl_curve_`` and ``estimate_`` (the full record).
    """

    def __init__(self, n_neighbors: int = 10, seed: int = 0,
                 max_dim: int | None = None):
        self.n_neighbors = n_neighbors
        self.seed = seed
        self.max_dim = max_dim

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        est = danco(X, ell=self.n_neighbors, seed=self.seed, d_max=self.max_dim)
        self.estimate_ = est
        self.dimension_ = est.d_hat
        self.kl_curve_ = est.kl_curve
        return self
