"""Shared test utilities."""

import numpy as np


def brute_sq_dist(X):
    n = len(X)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = sum((X[i, k] - X[j, k]) ** 2 for k in range(X.shape[1]))
    return out


def indicator_basis(vectors, labels):
    """Rotate a degenerate eigenspace basis onto the canonical class
    indicator vectors.

    ``vectors`` must span the unit eigenspace of an ideally separated
    kernel (one column per class); any basis of that space is a linear
    mix of class indicators, so inverting the per-class value matrix
    recovers the indicators themselves.
    """
    classes = np.unique(labels)
    k = vectors.shape[1]
    assert classes.size == k, "need one eigenvector per class"
    means = np.array([[vectors[labels == c, j].mean() for j in range(k)]
                      for c in classes])
    return vectors @ np.linalg.inv(means)


def block_kernel(sizes, rng, off_scale=0.5):
    """Exact block-diagonal affinity matrix with connected positive blocks,
    unit diagonal and zero cross-block entries."""
    n = sum(sizes)
    K = np.zeros((n, n))
    start = 0
    for size in sizes:
        sl = slice(start, start + size)
        block = off_scale * (0.5 + 0.5 * rng.random((size, size)))
        block = 0.5 * (block + block.T)
        K[sl, sl] = block
        start += size
    np.fill_diagonal(K, 1.0)
    return K


def labels_for_sizes(sizes):
    return np.concatenate([np.full(s, c) for c, s in enumerate(sizes)])
