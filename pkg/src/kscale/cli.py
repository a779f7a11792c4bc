"""Command-line surface: generate benchmark data, estimate intrinsic
dimension, select kernel scales, embed, and sweep classification criteria.

Exit codes: 0 success, 2 usage error, 3 data/file error, 4 numeric failure.
Every command with a --seed is byte-reproducible; files are written
atomically (temp file + rename).  Set KSCALE_THREADS to parallelize
criterion sweeps across grid points.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines, classification, datasets, manifold
from .diffusion import dm_embed, gaussian_kernel, scaled_kernel
from .errors import DataError, InvalidInputError, NumericError
from .intrinsic import danco
from .numerics import make_rng

_GEN_KINDS = ("swiss", "swiss-noisy", "mixture", "spiral")
_SCALE_METHODS = ("std", "std-inverse", "maxmin", "singer", "zelnik",
                  "manifold", "rho_psi", "ge", "rho_p")
_SUPERVISED = ("rho_psi", "ge", "rho_p")


def _add_io_args(p, labels=True):
    p.add_argument("--input", required=True, help="input data CSV")
    if labels:
        p.add_argument("--labels-col", type=int, default=None,
                       help="index of the integer label column (negative allowed)")
    p.add_argument("--has-header", action="store_true", help="skip a header row")


def _add_grid_args(p):
    p.add_argument("--grid-min", type=float, default=None, help="smallest epsilon")
    p.add_argument("--grid-max", type=float, default=None, help="largest epsilon")
    p.add_argument("--grid-count", type=int, default=None, help="number of grid points")
    p.add_argument("--grid-linear", action="store_true",
                   help="linear instead of log spacing (needs --grid-min/--grid-max)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kscale",
                                     description="diffusion-map embeddings and kernel scale selection")
    parser.add_argument("--config", default=None,
                        help="JSON file whose entries override flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic dataset")
    gen.add_argument("kind", choices=_GEN_KINDS)
    gen.add_argument("--n", type=int, default=2000, help="sample count (swiss variants)")
    gen.add_argument("--d-signal", type=int, default=10)
    gen.add_argument("--d-noise", type=int, default=10)
    gen.add_argument("--sigma-t", type=float, default=1.0, help="projection entry std")
    gen.add_argument("--sigma-n", type=float, default=2.0, help="appended noise std")
    gen.add_argument("--sigma-m", type=float, default=3.0, help="center covariance scale")
    gen.add_argument("--sigma-v", type=float, default=0.5, help="class covariance scale")
    gen.add_argument("--n-per-class", type=int, default=100)
    gen.add_argument("--dim", type=int, default=6, help="mixture ambient dimension")
    gen.add_argument("--classes", type=int, default=2, help="mixture class count")
    gen.add_argument("--nc", type=int, default=4, help="spiral class count")
    gen.add_argument("--np", type=int, default=100, dest="np_", help="spiral points per class")
    gen.add_argument("--gap", type=float, default=0.02, help="spiral gap parameter")
    gen.add_argument("--sigma", type=float, default=0.4, help="spiral noise covariance scale")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    scale = sub.add_parser("scale", help="select a kernel scale")
    scale.add_argument("--method", required=True, choices=_SCALE_METHODS)
    _add_io_args(scale)
    _add_grid_args(scale)
    scale.add_argument("--c", type=float, default=2.0, help="max-min multiplier")
    scale.add_argument("--r", type=int, default=7, help="local-scaling neighbor rank")
    scale.add_argument("--ell", type=int, default=10, help="dimension-estimation neighborhood")
    scale.add_argument("--dim", type=int, default=None, help="embedding dimension for rho_psi")
    scale.add_argument("--no-permute", action="store_true",
                       help="skip the correlation feature reordering (manifold method)")
    scale.add_argument("--seed", type=int, default=0)
    scale.add_argument("--out", required=True, help="selection JSON path")
    scale.add_argument("--curve-out", default=None, help="optional criterion-curve CSV")

    embed = sub.add_parser("embed", help="write diffusion coordinates")
    _add_io_args(embed)
    embed.add_argument("--eps", type=float, default=None)
    embed.add_argument("--scale-json", default=None,
                       help="selection JSON supplying epsilon (and feature weights)")
    embed.add_argument("--d", type=int, default=2, help="number of coordinates")
    embed.add_argument("--out", required=True)

    dim = sub.add_parser("dim", help="estimate the intrinsic dimension")
    _add_io_args(dim)
    dim.add_argument("--ell", type=int, default=10)
    dim.add_argument("--max-dim", type=int, default=None)
    dim.add_argument("--seed", type=int, default=0)
    dim.add_argument("--out", default=None, help="optional JSON output")

    sweep = sub.add_parser("sweep", help="criteria and accuracy over an epsilon grid")
    _add_io_args(sweep)
    _add_grid_args(sweep)
    sweep.add_argument("--d", type=int, default=2, help="embedding dimension")
    sweep.add_argument("--k", type=int, default=1, help="k-NN neighbor count")
    sweep.add_argument("--protocol", choices=("loo", "kfold"), default="loo")
    sweep.add_argument("--folds", type=int, default=20)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", required=True, help="per-epsilon CSV path")
    sweep.add_argument("--report", default=None, help="optional JSON report path")
    return parser


def _resolve_grid(args, X) -> np.ndarray:
    count = args.grid_count or 40
    if args.grid_min is not None and args.grid_max is not None:
        if not 0 < args.grid_min < args.grid_max:
            raise InvalidInputError("need 0 < grid-min < grid-max")
        if args.grid_linear:
            return np.linspace(args.grid_min, args.grid_max, count)
        return np.geomspace(args.grid_min, args.grid_max, count)
    if args.grid_linear:
        raise InvalidInputError("--grid-linear needs explicit --grid-min/--grid-max")
    return classification.sweep_grid(X, count=count)


def _load_input(args, need_labels: bool):
    if need_labels:
        if args.labels_col is None:
            raise InvalidInputError("this method requires --labels-col")
        ds = datasets.load_labeled_csv(args.input, label_column=args.labels_col,
                                       has_header=args.has_header)
        return ds.X, ds
    if getattr(args, "labels_col", None) is not None:
        ds = datasets.load_labeled_csv(args.input, label_column=args.labels_col,
                                       has_header=args.has_header)
        return ds.X, ds
    return datasets.load_matrix_csv(args.input, has_header=args.has_header), None


def _cmd_gen(args) -> int:
    rng = make_rng(args.seed)
    params = {"kind": args.kind, "seed": args.seed}
    labels = None
    if args.kind == "swiss":
        X, _, _ = datasets.gen_swiss_roll(args.n, rng)
        params.update(n=args.n)
    elif args.kind == "swiss-noisy":
        Y, _, _ = datasets.gen_swiss_roll(args.n, rng)
        X = datasets.embed_in_noise(Y, args.d_signal, args.d_noise,
                                    args.sigma_t, args.sigma_n, rng)
        params.update(n=args.n, d_signal=args.d_signal, d_noise=args.d_noise,
                      sigma_t=args.sigma_t, sigma_n=args.sigma_n)
    elif args.kind == "mixture":
        ds = datasets.gen_gaussian_mixture(args.sigma_m, args.sigma_v,
                                           n_per_class=args.n_per_class,
                                           dim=args.dim, n_classes=args.classes, rng=rng)
        X, labels = ds.X, ds.labels
        params.update(sigma_m=args.sigma_m, sigma_v=args.sigma_v,
                      n_per_class=args.n_per_class, dim=args.dim, classes=args.classes)
    else:
        ds = datasets.gen_spiral_classes(args.nc, args.np_, args.gap, args.sigma, rng=rng)
        X, labels = ds.X, ds.labels
        params.update(nc=args.nc, np=args.np_, gap=args.gap, sigma=args.sigma)
    datasets.save_matrix_csv(args.out, X, labels=labels)
    params["labels_column"] = None if labels is None else int(X.shape[1])
    params["columns"] = int(X.shape[1]) + (0 if labels is None else 1)
    datasets.save_report(params, Path(args.out).with_suffix(".params.json"))
    print(f"wrote {args.out} ({X.shape[0]} rows)")
    return 0


def _cmd_scale(args) -> int:
    method = args.method
    X, ds = _load_input(args, need_labels=method in _SUPERVISED)
    config = {"method": method, "input": args.input, "seed": args.seed}
    extra: dict = {}
    curve_rows = None
    grid: list = []
    scores: list = []

    if method in ("std", "std-inverse"):
        sel = baselines.std_scaling(X, inverse=method == "std-inverse")
        epsilon = sel.epsilon
        extra.update(scaling=sel.scaling, flags=sel.flags)
    elif method == "maxmin":
        sel = baselines.maxmin_scale(X, c=args.c)
        epsilon = sel.epsilon
        config["c"] = args.c
    elif method == "singer":
        eps_grid = (_resolve_grid(args, X) if args.grid_min is not None
                    else baselines.singer_grid(X, count=args.grid_count or 64))
        curve = baselines.kernel_sum_curve(X, eps_grid)
        sel = baselines.singer_range(curve)
        epsilon = sel.epsilon
        grid, scores = curve[:, 0].tolist(), curve[:, 1].tolist()
        extra.update(eps_range=list(sel.eps_range), slope=sel.slope)
        curve_rows = curve
    elif method == "zelnik":
        sel = baselines.zelnik_scales(X, r=args.r)
        epsilon = None
        config["r"] = args.r
        extra.update(local_sigmas=sel.local_sigmas, flags=sel.flags)
    elif method == "manifold":
        sel = manifold.manifold_feature_scaling(X, ell=args.ell, seed=args.seed,
                                                permute=not args.no_permute)
        epsilon = sel.epsilon
        config.update(ell=args.ell, permute=not args.no_permute)
        extra.update(scaling=sel.scaling, d_hat=sel.d_hat,
                     d_eps_final=sel.d_eps_final, objective=sel.objective,
                     trace=sel.trace, permutation=sel.permutation, flags=sel.flags)
    else:
        eps_grid = _resolve_grid(args, X)
        curve = classification.criterion_sweep(ds, eps_grid, method, dim=args.dim)
        epsilon = curve.argmax_eps
        grid, scores = curve.grid.tolist(), curve.scores.tolist()
        extra.update(best_index=curve.best_index, failures=curve.failures,
                     grid_note="upper bound capped at 100x median squared distance"
                     if args.grid_max is None else "explicit grid bounds")
        config.update(dim=args.dim, grid_count=len(eps_grid))
        curve_rows = np.column_stack([curve.grid, curve.scores])

    report = datasets.build_report(method=method, grid=grid, scores=scores,
                                   argmax_eps=epsilon, accuracy=[],
                                   seed=args.seed, config=config, **extra)
    datasets.save_report(report, args.out)
    if args.curve_out and curve_rows is not None:
        datasets.save_matrix_csv(args.curve_out, np.asarray(curve_rows),
                                 header=["#eps", "score"])
    shown = "n/a" if epsilon is None else format(epsilon, ".6g")
    print(f"method={method} epsilon={shown}")
    return 0


def _cmd_embed(args) -> int:
    X, _ = _load_input(args, need_labels=False)
    epsilon = args.eps
    scaling = None
    if args.scale_json is not None:
        with open(args.scale_json, "r", encoding="utf-8") as handle:
            sel = json.load(handle)
        if epsilon is None:
            epsilon = sel.get("argmax_eps")
        if sel.get("scaling") is not None:
            scaling = np.asarray(sel["scaling"], dtype=float)
    if epsilon is None:
        raise InvalidInputError("supply --eps or --scale-json")
    kp = scaled_kernel(X, scaling, epsilon) if scaling is not None else gaussian_kernel(X, epsilon)
    emb = dm_embed(kp, args.d)
    datasets.save_matrix_csv(args.out, emb.coords)
    print(f"wrote {args.out} ({emb.coords.shape[0]}x{emb.coords.shape[1]})")
    return 0


def _cmd_dim(args) -> int:
    X, ds = _load_input(args, need_labels=False)
    est = danco(X, ell=args.ell, seed=args.seed, d_max=args.max_dim)
    print(f"d_hat = {est.d_hat}")
    for d, kl in est.kl_curve:
        print(f"  d={d:3d}  kl={kl:.9g}")
    if args.out:
        report = datasets.build_report(method="danco", grid=[d for d, _ in est.kl_curve],
                                       scores=[kl for _, kl in est.kl_curve],
                                       argmax_eps=None, accuracy=[], seed=args.seed,
                                       config={"ell": args.ell, "max_dim": args.max_dim},
                                       d_hat=est.d_hat, notes=list(est.notes))
        datasets.save_report(report, args.out)
    return 0


def _cmd_sweep(args) -> int:
    if args.labels_col is None:
        raise InvalidInputError("sweep requires --labels-col")
    X, ds = _load_input(args, need_labels=True)
    grid = _resolve_grid(args, X)
    rows = []
    accs, curves = [], {m: [] for m in ("rho_psi", "ge", "rho_p")}
    for eps in grid:
        scores = {}
        for m in curves:
            try:
                scores[m] = classification._evaluate(m, ds, float(eps), args.d)
            except (NumericError, InvalidInputError):
                scores[m] = float("nan")
        try:
            report = datasets.cross_validate(ds, epsilon=float(eps), dim=args.d,
                                             k_neighbors=args.k, protocol=args.protocol,
                                             folds=args.folds if args.protocol == "kfold" else None,
                                             seed=args.seed)
            acc = report.accuracy
        except (NumericError, InvalidInputError):
            acc = float("nan")
        accs.append(acc)
        for m in curves:
            curves[m].append(scores[m])
        rows.append([float(eps), acc, scores["rho_psi"], scores["ge"], scores["rho_p"]])
    datasets.save_matrix_csv(args.out, np.asarray(rows),
                             header=["#eps", "acc", "rho_psi", "ge", "rho_p"])
    if args.report:
        finite = np.isfinite(np.asarray(accs))
        best_eps = float(grid[int(np.nanargmax(np.where(finite, accs, -np.inf)))]) if finite.any() else None
        report = datasets.build_report(
            method="sweep", grid=grid.tolist(), scores=curves["rho_p"],
            argmax_eps=best_eps, accuracy=accs, seed=args.seed,
            config={"d": args.d, "k": args.k, "protocol": args.protocol,
                    "folds": args.folds if args.protocol == "kfold" else None,
                    "input": args.input},
            rho_psi=curves["rho_psi"], ge=curves["ge"])
        datasets.save_report(report, args.report)
    print(f"wrote {args.out} ({len(rows)} grid points)")
    return 0


_DISPATCH = {"gen": _cmd_gen, "scale": _cmd_scale, "embed": _cmd_embed,
             "dim": _cmd_dim, "sweep": _cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    known, _ = parser.parse_known_args(argv)
    if known.config:
        try:
            with open(known.config, "r", encoding="utf-8") as handle:
                overrides = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 3
        if not isinstance(overrides, dict):
            print("error: config must be a JSON object", file=sys.stderr)
            return 2
        parser.set_defaults(**overrides)
    try:
        args = parser.parse_args(argv)
        return _DISPATCH[args.command](args)
    except InvalidInputError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
