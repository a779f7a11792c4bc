"""Synthetic benchmark generators, embedding evaluation (rigid alignment and
MSE), k-NN classification protocols, and CSV/JSON input-output.

Noise conventions follow the constructions they implement: the projected
swiss roll takes standard deviations (``sigma_t``, ``sigma_n``), while the
Gaussian mixture and the spiral take the scalar multiplying the identity
covariance (``sigma_m``, ``sigma_v``, ``sigma_s``); docstrings say which.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .classification import LabeledDataset
from .diffusion import dm_embed, gaussian_kernel, scaled_kernel
from .errors import DataError, InvalidInputError
from .numerics import _as_matrix, make_rng

__all__ = [
    "AlignmentResult",
    "CvReport",
    "gen_swiss_roll",
    "embed_in_noise",
    "gen_gaussian_mixture",
    "gen_spiral_classes",
    "procrustes_align",
    "apply_alignment",
    "embedding_mse",
    "knn_classify",
    "loo_knn_accuracy",
    "cross_validate",
    "load_matrix_csv",
    "load_labeled_csv",
    "save_matrix_csv",
    "save_report",
]


# ---------------------------------------------------------------------------
# generators

def gen_swiss_roll(n: int = 2000, rng=0):
    """Swiss roll (6 t cos t, h, 6 t sin t) with t ~ U[3pi/2, 9pi/2] and
    h ~ U[0, 100].  Returns (points, t, h)."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = make_rng(rng)
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, n)
    h = rng.uniform(0.0, 100.0, n)
    Y = np.column_stack([6.0 * t * np.cos(t), h, 6.0 * t * np.sin(t)])
    return Y, t, h


def embed_in_noise(Y, d_signal: int, d_noise: int, sigma_t: float,
                   sigma_n: float, rng=0) -> np.ndarray:
    """Project 3-D points through a random d_signal x 3 Gaussian matrix
    (entry std ``sigma_t``) and append d_noise i.i.d. Gaussian noise
    features (std ``sigma_n``)."""
    Y = _as_matrix(Y, "Y")
    if Y.shape[1] != 3:
        raise InvalidInputError("Y must have 3 columns")
    if d_signal < 3:
        raise InvalidInputError("d_signal must be >= 3")
    if d_noise < 0 or sigma_t < 0 or sigma_n < 0:
        raise InvalidInputError("noise parameters must be nonnegative")
    rng = make_rng(rng)
    proj = rng.normal(0.0, sigma_t, size=(d_signal, 3))
    noise = rng.normal(0.0, sigma_n, size=(Y.shape[0], d_noise))
    return np.column_stack([Y @ proj.T, noise])


def gen_gaussian_mixture(sigma_m: float, sigma_v: float, n_per_class: int = 100,
                         dim: int = 6, n_classes: int = 2, rng=0) -> LabeledDataset:
    """Gaussian mixture: class centers from N(0, sigma_m * I), members from
    N(center, sigma_v * I).  Both sigmas scale the covariance."""
    if sigma_m <= 0 or sigma_v <= 0:
        raise InvalidInputError("sigma_m and sigma_v must be positive")
    if n_per_class < 1 or n_classes < 1:
        raise InvalidInputError("counts must be positive")
    rng = make_rng(rng)
    centers = rng.normal(0.0, np.sqrt(sigma_m), size=(n_classes, dim))
    X = np.vstack([rng.normal(centers[c], np.sqrt(sigma_v), size=(n_per_class, dim))
                   for c in range(n_classes)])
    labels = np.repeat(np.arange(n_classes), n_per_class)
    return LabeledDataset(X=X, labels=labels)


def gen_spiral_classes(n_classes: int = 4, n_per_class: int = 100, gap: float = 0.02,
                       sigma_s: float = 0.4, rng=0, return_params: bool = False):
    """Classes on consecutive arcs of a 3-D spiral.

    Class l draws its parameter r uniformly from
    [(l-1)/n_classes, l/n_classes - gap] and maps it through
    (6 pi r cos(6 pi r), 6 pi r sin(6 pi r), r^3 - r^2) plus Gaussian noise
    with covariance sigma_s * I.
    """
    seg = 1.0 / n_classes
    if not 0 <= gap < seg:
        raise InvalidInputError(f"gap must lie in [0, {seg}) for {n_classes} classes")
    if n_per_class < 1:
        raise InvalidInputError("n_per_class must be >= 1")
    if sigma_s < 0:
        raise InvalidInputError("sigma_s must be nonnegative")
    rng = make_rng(rng)
    r_parts, label_parts = [], []
    for l in range(1, n_classes + 1):
        r_parts.append(rng.uniform((l - 1) * seg, l * seg - gap, size=n_per_class))
        label_parts.append(np.full(n_per_class, l - 1))
    r = np.concatenate(r_parts)
    labels = np.concatenate(label_parts)
    angle = 6.0 * np.pi * r
    X = np.column_stack([angle * np.cos(angle), angle * np.sin(angle), r**3 - r**2])
    if sigma_s > 0:
        X = X + rng.normal(0.0, np.sqrt(sigma_s), size=X.shape)
    ds = LabeledDataset(X=X, labels=labels)
    return (ds, r) if return_params else ds


# ---------------------------------------------------------------------------
# alignment and MSE

@dataclass(frozen=True)
class AlignmentResult:
    """Rigid map minimizing ||R s_i + T - t_i||^2; ``err`` is the attained
    sum of squared residuals."""

    rotation: np.ndarray
    translation: np.ndarray
    err: float
    flags: tuple = ()


def procrustes_align(source, target, allow_reflection: bool = True) -> AlignmentResult:
    """Best rigid alignment of ``source`` onto ``target``.

    Reflections are permitted by default because eigenvector-derived
    embeddings carry arbitrary signs; ``allow_reflection=False`` restricts
    to proper rotations (det +1).
    """
    source = _as_matrix(source, "source")
    target = _as_matrix(target, "target")
    if source.shape != target.shape:
        raise InvalidInputError("source and target must share a shape")
    n, d = source.shape
    if n < d:
        raise InvalidInputError("need at least as many samples as dimensions")
    mu_s, mu_t = source.mean(axis=0), target.mean(axis=0)
    sc, tc = source - mu_s, target - mu_t
    flags: tuple = ()
    if float(np.abs(sc).max(initial=0.0)) == 0.0:
        R = np.eye(d)
        flags = ("degenerate source; identity rotation",)
    else:
        U, _, Vt = np.linalg.svd(sc.T @ tc)
        R = (U @ Vt).T
        if not allow_reflection and np.linalg.det(R) < 0:
            U[:, -1] = -U[:, -1]
            R = (U @ Vt).T
    T = mu_t - R @ mu_s
    residual = source @ R.T + T[None, :] - target
    return AlignmentResult(rotation=R, translation=T,
                           err=float((residual**2).sum()), flags=flags)


def apply_alignment(result: AlignmentResult, points) -> np.ndarray:
    points = _as_matrix(points, "points")
    return points @ result.rotation.T + result.translation[None, :]


def embedding_mse(aligned, reference) -> float:
    """Mean squared row distance between two point sets of equal shape."""
    aligned = _as_matrix(aligned, "aligned")
    reference = _as_matrix(reference, "reference")
    if aligned.shape != reference.shape:
        raise InvalidInputError("shapes must match")
    return float(((aligned - reference) ** 2).sum(axis=1).mean())


# ---------------------------------------------------------------------------
# k-NN classification protocols

def knn_classify(train_X, train_y, test_X, k: int = 1) -> np.ndarray:
    """Majority vote among the k nearest training points.

    Vote ties break toward the class with the smallest summed neighbor
    distance, then the smallest class id.
    """
    train_X = _as_matrix(train_X, "train_X")
    test_X = _as_matrix(test_X, "test_X")
    train_y = np.asarray(train_y)
    if train_y.shape[0] != train_X.shape[0]:
        raise InvalidInputError("one label per training sample required")
    if not 1 <= k <= train_X.shape[0]:
        raise InvalidInputError(f"k={k} out of range for {train_X.shape[0]} training samples")
    dist = cdist(test_X, train_X)
    out = np.empty(test_X.shape[0], dtype=train_y.dtype)
    for i in range(test_X.shape[0]):
        order = np.argsort(dist[i], kind="stable")[:k]
        votes = train_y[order]
        classes, counts = np.unique(votes, return_counts=True)
        top = classes[counts == counts.max()]
        if top.size == 1:
            out[i] = top[0]
        else:
            sums = [(dist[i, order[votes == c]].sum(), c) for c in top]
            out[i] = min(sums)[1]
    return out


def loo_knn_accuracy(points, labels, k: int = 1) -> float:
    """Leave-one-out k-NN accuracy within one point set."""
    points = _as_matrix(points, "points")
    labels = np.asarray(labels)
    n = points.shape[0]
    if not 1 <= k <= n - 1:
        raise InvalidInputError(f"k={k} out of range for {n} samples")
    dist = cdist(points, points)
    np.fill_diagonal(dist, np.inf)
    if k == 1:
        pred = labels[np.argmin(dist, axis=1)]
        return float((pred == labels).mean())
    correct = 0
    for i in range(n):
        order = np.argsort(dist[i], kind="stable")[:k]
        votes = labels[order]
        classes, counts = np.unique(votes, return_counts=True)
        top = classes[counts == counts.max()]
        if top.size == 1:
            pred = top[0]
        else:
            pred = min((dist[i, order[votes == c]].sum(), c) for c in top)[1]
        correct += pred == labels[i]
    return correct / n


@dataclass
class CvReport:
    """Cross-validation outcome; ``accuracy`` is the mean of the per-fold
    accuracies over folds that kept every class in training."""

    protocol: str
    folds: int
    k_neighbors: int
    accuracy: float
    fold_accuracies: list
    seed: int
    epsilon: float | None = None
    dim: int | None = None
    ambient: bool = False
    flags: list = field(default_factory=list)


def cross_validate(ds: LabeledDataset, epsilon: float | None = None,
                   dim: int | None = None, k_neighbors: int = 1,
                   protocol: str = "loo", folds: int | None = None,
                   seed: int = 0, ambient: bool = False,
                   scaling=None) -> CvReport:
    """Transductive cross-validation of a k-NN classifier.

    The embedding (when not ``ambient``) is computed once on the full
    dataset; only the classifier respects the folds.  ``protocol`` is
    "loo" or "kfold" (the latter shuffles with ``seed`` and needs
    ``folds``).  Folds whose training part lost a class are flagged and
    excluded from the mean.
    """
    n = ds.n_samples
    if ambient:
        space = ds.X
    else:
        if epsilon is None or dim is None:
            raise InvalidInputError("epsilon and dim are required unless ambient=True")
        kp = (scaled_kernel(ds.X, scaling, epsilon) if scaling is not None
              else gaussian_kernel(ds.X, epsilon))
        space = dm_embed(kp, dim).coords
    if protocol == "loo":
        index_folds = [np.array([i]) for i in range(n)]
        folds_used = n
    elif protocol == "kfold":
        if folds is None or not 2 <= folds <= n:
            raise InvalidInputError("kfold needs 2 <= folds <= N")
        perm = make_rng(seed).permutation(n)
        index_folds = [perm[i::folds] for i in range(folds)]
        folds_used = folds
    else:
        raise InvalidInputError(f"unknown protocol {protocol!r}")

    all_classes = ds.classes
    fold_accs, flags = [], []
    mask = np.ones(n, dtype=bool)
    for fi, test_idx in enumerate(index_folds):
        mask[:] = True
        mask[test_idx] = False
        train_y = ds.labels[mask]
        if np.unique(train_y).size != all_classes.size:
            flags.append(f"fold {fi} dropped: class missing from training part")
            continue
        pred = knn_classify(space[mask], train_y, space[test_idx], k=k_neighbors)
        fold_accs.append(float((pred == ds.labels[test_idx]).mean()))
    if not fold_accs:
        raise InvalidInputError("no usable folds")
    return CvReport(protocol=protocol, folds=folds_used, k_neighbors=k_neighbors,
                    accuracy=float(np.mean(fold_accs)), fold_accuracies=fold_accs,
                    seed=int(seed), epsilon=epsilon, dim=dim, ambient=ambient,
                    flags=flags)


# ---------------------------------------------------------------------------
# CSV / JSON input-output

def _atomic_write_text(path, text: str):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_float(value: float) -> str:
    return format(float(value), ".17g")


def save_matrix_csv(path, X, labels=None, header=None):
    """Write a numeric CSV (floats at 17 significant digits, atomic write).

    Labels, when given, become an extra final integer column.
    """
    X = _as_matrix(X)
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for i in range(X.shape[0]):
        row = [_format_float(v) for v in X[i]]
        if labels is not None:
            row.append(str(int(labels[i])))
        lines.append(",".join(row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _read_rows(path, has_header: bool):
    rows, width = [], None
    header = None
    with open(path, "r", encoding="utf-8", newline="") as handle:
        for lineno, raw in enumerate(csv.reader(handle), start=1):
            if not raw or (len(raw) == 1 and not raw[0].strip()):
                continue
            if raw[0].lstrip().startswith("#"):
                continue
            if has_header and header is None:
                header = [c.strip() for c in raw]
                continue
            if width is None:
                width = len(raw)
            elif len(raw) != width:
                raise DataError(f"{path}: line {lineno}: expected {width} cells, got {len(raw)}")
            try:
                rows.append([float(c) for c in raw])
            except ValueError as exc:
                raise DataError(f"{path}: line {lineno}: non-numeric cell ({exc})") from exc
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=float), header


def load_matrix_csv(path, has_header: bool = False) -> np.ndarray:
    """Read a numeric CSV (comma separated, '#' comments allowed)."""
    return _read_rows(path, has_header)[0]


def load_labeled_csv(path, label_column: int | str = -1,
                     has_header: bool = False) -> LabeledDataset:
    """Read a numeric CSV and split off an integer label column.

    ``label_column`` is a column index (negative allowed) or, when the file
    has a header, a column name.
    """
    data, header = _read_rows(path, has_header)
    n_cols = data.shape[1]
    if isinstance(label_column, str):
        if header is None:
            raise DataError(f"{path}: named label column needs a header row")
        try:
            col = header.index(label_column)
        except ValueError as exc:
            raise DataError(f"{path}: no column named {label_column!r}") from exc
    else:
        col = int(label_column)
        if col < 0:
            col += n_cols
        if not 0 <= col < n_cols:
            raise DataError(f"{path}: label column {label_column} out of range")
    labels = data[:, col]
    as_int = labels.astype(np.int64)
    if not np.array_equal(as_int, labels):
        raise DataError(f"{path}: label column contains non-integer values")
    X = np.delete(data, col, axis=1)
    if X.shape[1] == 0:
        raise DataError(f"{path}: no feature columns left after removing labels")
    return LabeledDataset(X=X, labels=as_int)


def _jsonable(obj):
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    return obj


def build_report(method: str, grid=(), scores=(), argmax_eps=None,
                 accuracy=(), seed: int = 0, config: dict | None = None,
                 **extra) -> dict:
    """Assemble the serializable report record; the first seven field names
    are a stable external schema."""
    report = {
        "method": method,
        "grid": _jsonable(list(grid)),
        "scores": _jsonable(list(scores)),
        "argmax_eps": _jsonable(argmax_eps),
        "accuracy": _jsonable(list(accuracy)),
        "seed": int(seed),
        "config": _jsonable(config or {}),
    }
    for key, value in extra.items():
        report[key] = _jsonable(value)
    return report


def save_report(report: dict, path):
    """Serialize a report dict to JSON (atomic write, stable key order)."""
    _atomic_write_text(path, json.dumps(_jsonable(report), indent=2) + "\n")
