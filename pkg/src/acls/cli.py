"""Command-line front end: ``acls {fit,simulate,landscape,breakdown,background,inpaint}``.

Exit codes are 0 on success, 2 for bad input and 3 when a computation fails.
Every output carries a run manifest (subcommand, flags, seed, version, wall
time), either embedded in JSON or written alongside as ``<out>.manifest.json``.
"""

import argparse
import json
import math
import os
from pathlib import Path
import sys
import time

import numpy as np

from . import __version__
from .errors import AclsError, DegenerateScaleError, InvalidArgumentError
from .estimators import ExactConfig, RgdConfig, fit_ahr, fit_exact, fit_hybrid, fit_lts, fit_ols, fit_rgd
from .inference import robust_inference
from .inpainting import Dictionary, dct_dictionary, fit_inpaint, patchify, psnr, reassemble
from .io import load_matrix, read_csv, read_pgm, to_uint8, write_csv, write_matrix, write_pgm
from .loss import Dataset, LossConfig, TauRule, select_tau
from .simulation import ESTIMATORS, ScenarioConfig, breakdown_probe, landscape_profile, run_replication
from .subspace import fit_subspace_acls, fit_subspace_ols, mad_sigma

INPUT_ERRORS = (InvalidArgumentError, DegenerateScaleError, OSError, ValueError)


def fmt(x):
    """17 significant digits, enough to round-trip any double."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent=2, _level=0):
    """JSON text with every float written by :func:`fmt`."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, np.generic):
        return dumps(obj.item(), indent, _level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj)
    return json.dumps(str(obj))


def manifest(args, started):
    flags = {k: v for k, v in vars(args).items() if k not in ("func",)}
    return {
        "subcommand": args.command,
        "flags": flags,
        "seed": flags.get("seed"),
        "version": __version__,
        "wall_seconds": time.perf_counter() - started,
    }


def emit_json(payload, out):
    text = dumps(payload) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def emit_csv(header, rows, out, man):
    rows = [[fmt(v) if isinstance(v, float) else v for v in row] for row in rows]
    if out:
        write_csv(out, header, rows)
        Path(str(out) + ".manifest.json").write_text(dumps(man) + "\n", encoding="utf-8")
    else:
        import csv

        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        sys.stderr.write(dumps(man) + "\n")


def threads(args):
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("ACLS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InvalidArgumentError(f"ACLS_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


# --- fit -------------------------------------------------------------------


def _tau_for_fit(args, data):
    if args.tau is not None:
        return LossConfig(select_tau(data.n, TauRule.EXPLICIT, tau=args.tau), TauRule.EXPLICIT)
    rule = TauRule(args.tau_rule)
    sigma = mad_sigma(data.y) if rule is TauRule.MAD_SCALED else None
    return LossConfig(select_tau(data.n, rule, sigma_hat=sigma, c=args.tau_c), rule)


def cmd_fit(args, started):
    header, M = read_csv(args.csv)
    ycol = args.y if args.y is not None else header[-1]
    if ycol not in header:
        raise InvalidArgumentError(f"response column {ycol!r} not in header {header}")
    j = header.index(ycol)
    X = np.delete(M, j, axis=1)
    data = Dataset(X, M[:, j], add_intercept=not args.no_intercept)
    cfg = _tau_for_fit(args, data)
    rcfg = RgdConfig(restarts=args.restarts, seed=args.seed)
    xcfg = ExactConfig(max_n=args.max_n, strategy=args.strategy, seed=args.seed)
    solver = args.solver
    if solver == "exact":
        fit = fit_exact(data, cfg, xcfg)
    elif solver == "rgd":
        fit = fit_rgd(data, cfg, rcfg)
    elif solver == "hybrid":
        fit = fit_hybrid(data, cfg, rcfg, args.subsample_fraction, args.subsample_runs, xcfg)
    elif solver == "ols":
        fit = fit_ols(data)
    elif solver == "ahr":
        fit = fit_ahr(data, cfg)
    else:
        fit = fit_lts(data, h=args.h, seed=args.seed)
    result = fit.to_dict()
    # timing lives in the manifest so repeated runs are byte-identical elsewhere
    elapsed = result.pop("elapsed_seconds")
    payload = {"tau": cfg.tau, "tau_rule": cfg.rule.value, "predictors": [h for h in header if h != ycol],
               "intercept": not args.no_intercept, "fit": result}
    if args.infer:
        payload["inference"] = robust_inference(data, fit, cfg).to_dict()
    man = manifest(args, started)
    man["fit_seconds"] = elapsed
    payload["manifest"] = man
    emit_json(payload, args.out)


# --- simulate / landscape / breakdown -------------------------------------


def cmd_simulate(args, started):
    for name in args.estimators:
        if name not in ESTIMATORS:
            raise InvalidArgumentError(f"unknown estimator {name!r}; choose from {', '.join(ESTIMATORS)}")
    rows = []
    for a in args.a:
        cfg = ScenarioConfig(scenario=args.scenario, n=args.n, d=args.d, lam=args.lam, a=a, rho=args.rho,
                             seed=args.seed)
        summary = run_replication(cfg, args.estimators, args.replicates, args.restarts, args.tau, threads(args))
        rows.extend([r[k] for k in ("estimator", "scenario", "a", "median_mse", "median_sd", "mean_cpu_s")]
                    for r in summary.rows())
    header = ["estimator", "scenario", "a", "median_mse", "median_sd", "mean_cpu_s"]
    emit_csv(header, rows, args.out, manifest(args, started))


def cmd_landscape(args, started):
    if len(args.grid) != 3 or args.grid[2] < 2:
        raise InvalidArgumentError("grid must be lo,hi,steps with steps >= 2")
    rows = []
    for case in args.case:
        for curve in landscape_profile(case, args.n_list, tuple(args.grid), args.seed):
            rows.extend([case, curve["n"], float(b), float(v)] for b, v in zip(curve["beta"], curve["loss"]))
    emit_csv(["case", "n", "beta", "loss"], rows, args.out, manifest(args, started))


def cmd_breakdown(args, started):
    rows = []
    for est in args.estimator:
        for m, t, norm in breakdown_probe(args.n, args.d, args.m_list, args.magnitudes, est, args.seed, args.tau):
            rows.append([est, m, t, norm])
    emit_csv(["estimator", "m", "t", "norm"], rows, args.out, manifest(args, started))


# --- background ------------------------------------------------------------


def _frame_paths(inputs):
    paths = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(q for q in p.iterdir() if q.suffix.lower() == ".pgm"))
        else:
            paths.append(p)
    if not paths:
        raise InvalidArgumentError("no PGM frames given")
    return paths


def cmd_background(args, started):
    paths = _frame_paths(args.frames)
    frames = [read_pgm(p) for p in paths]
    shape = frames[0].shape
    if any(f.shape != shape for f in frames):
        raise InvalidArgumentError("all frames must share one size")
    Y = np.stack([f.ravel() for f in frames])
    if args.method == "ols":
        model = fit_subspace_ols(Y, args.q)
    else:
        tau = args.tau
        if tau is None:
            tau = select_tau(Y.shape[0], TauRule.MAD_SCALED, sigma_hat=mad_sigma(Y), c=args.tau_c)
        model = fit_subspace_acls(Y, args.q, tau, args.eps_opt, args.max_sweeps)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bg = model.background()
    fg = model.foreground(Y)
    for k, path in enumerate(paths):
        write_pgm(out / f"background_{k:04d}.pgm", bg[k].reshape(shape))
        write_pgm(out / f"foreground_{k:04d}.pgm", np.abs(fg[k]).reshape(shape))
    write_matrix(out / "mean.bin", model.m[None, :])
    write_matrix(out / "basis.bin", model.U)
    write_matrix(out / "scores.bin", model.S)
    summary = {
        "frames": [str(p) for p in paths],
        "shape": list(shape),
        "method": args.method,
        "tau": model.tau if math.isfinite(model.tau) else None,
        "objective": model.objective,
        "sweeps": model.sweeps,
        "converged": model.converged,
        "flagged": [bool(d) for d in model.delta],
        "manifest": manifest(args, started),
    }
    emit_json(summary, out / "summary.json")


# --- inpaint ---------------------------------------------------------------


def cmd_inpaint(args, started):
    image = read_pgm(args.image)
    Y, geom = patchify(image, args.patch, args.stride)
    n = Y.shape[0]
    if args.dictionary:
        D = Dictionary.from_matrix(load_matrix(args.dictionary))
        if D.n != n:
            raise InvalidArgumentError(f"dictionary has {D.n} rows, patches have {n} pixels")
    else:
        D = dct_dictionary(n, args.atoms if args.atoms else n)
    # code each patch around its median so the all-flagged first round does
    # not mistake the patch level for corruption
    level = np.zeros((1, Y.shape[1])) if args.no_center else np.median(Y, axis=0, keepdims=True)
    Yc = Y - level
    tau = args.tau
    if tau is None:
        tau = select_tau(n, TauRule.MAD_SCALED, sigma_hat=mad_sigma(Yc.T), c=args.tau_c)
    res = fit_inpaint(Yc, D, args.lam, tau, args.max_rounds)
    restored = reassemble(res.restored + level, geom)
    write_pgm(args.out, restored)
    metrics = {
        "tau": tau,
        "lambda": args.lam,
        "rounds": res.rounds,
        "converged": res.converged,
        "cycled": res.cycled,
        "mask_density": res.mask_density,
        "patches": int(Y.shape[1]),
        "atoms": int(D.m),
    }
    if args.truth:
        truth = to_uint8(read_pgm(args.truth)).astype(float)
        if truth.shape != image.shape:
            raise InvalidArgumentError("truth image size differs from the input")
        metrics["psnr_restored"] = psnr(to_uint8(restored).astype(float), truth)
        metrics["psnr_input"] = psnr(to_uint8(image).astype(float), truth)
    metrics["manifest"] = manifest(args, started)
    emit_json(metrics, args.metrics)


# --- parser ----------------------------------------------------------------


def build_parser():
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="acls", description="Adaptive capped least squares toolkit.",
                                     formatter_class=fmt_cls)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a regression from a CSV file", formatter_class=fmt_cls)
    p.add_argument("csv", help="headed CSV; the response column is --y, the rest are predictors")
    p.add_argument("--y", default=None, help="response column name (default: last column)")
    p.add_argument("--solver", choices=("exact", "rgd", "hybrid", "ols", "ahr", "lts"), default="rgd")
    p.add_argument("--tau", type=float, default=None, help="explicit tau; overrides --tau-rule")
    p.add_argument("--tau-rule", choices=(TauRule.SQRT_N_OVER_LOGLOG_N.value, TauRule.MAD_SCALED.value),
                   default=TauRule.SQRT_N_OVER_LOGLOG_N.value)
    p.add_argument("--tau-c", type=float, default=1.0, help="constant c for the mad-scaled rule")
    p.add_argument("--no-intercept", action="store_true", help="do not prepend an intercept column")
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=int, default=None, help="LTS coverage (default (n+p+1)//2)")
    p.add_argument("--subsample-fraction", type=float, default=0.3)
    p.add_argument("--subsample-runs", type=int, default=10)
    p.add_argument("--max-n", type=int, default=24, help="largest instance the exact solver accepts")
    p.add_argument("--strategy", choices=("branch-and-bound", "enumerate"), default="branch-and-bound")
    p.add_argument("--infer", action="store_true", help="add standard errors and p-values")
    p.add_argument("--out", default=None, help="JSON output path (default stdout)")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default ACLS_THREADS or CPU count)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="Monte Carlo comparison of estimators", formatter_class=fmt_cls)
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), default=2)
    p.add_argument("--a", type=float_list, default=[50.0], help="contamination shift(s), comma-separated")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="contamination probability")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--d", type=int, default=6, help="coefficients including the intercept")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--estimators", type=str_list, default=["ols", "ahr", "lts", "acls"])
    p.add_argument("--restarts", type=int, default=200)
    p.add_argument("--tau", type=float, default=None, help="explicit tau (default sqrt(n)/loglog(n))")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--threads", type=int, default=None, help="worker cap (default ACLS_THREADS or CPU count)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("landscape", help="empirical loss over a slope grid", formatter_class=fmt_cls)
    p.add_argument("--case", type=int_list, default=[1], help="cases 1-4, comma-separated")
    p.add_argument("--n-list", type=int_list, default=[50, 100, 200, 400])
    p.add_argument("--grid", type=float_list, default=[-5.0, 15.0, 401.0],
                   help="lo,hi,steps; write --grid=-5,15,401 when lo is negative")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None, help="accepted for uniformity; unused")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("breakdown", help="estimate norms under planted leverage points", formatter_class=fmt_cls)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m-list", type=int_list, default=[0, 1, 5, 9])
    p.add_argument("--magnitudes", type=float_list, default=[1e2, 1e3, 1e4])
    p.add_argument("--estimator", type=str_list, default=["exact", "ahr"], help="exact, ahr and/or ols")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=None, help="accepted for uniformity; unused")
    p.set_defaults(func=cmd_breakdown)

    p = sub.add_parser("background", help="robust background model from PGM frames", formatter_class=fmt_cls)
    p.add_argument("frames", nargs="+", help="PGM files or directories of PGM files (sorted by name)")
    p.add_argument("--q", type=int, default=3, help="subspace rank")
    p.add_argument("--method", choices=("acls", "ols"), default="acls")
    p.add_argument("--tau", type=float, default=None, help="explicit tau (default mad-scaled rule)")
    p.add_argument("--tau-c", type=float, default=1.0)
    p.add_argument("--eps-opt", type=float, default=1e-5)
    p.add_argument("--max-sweeps", type=int, default=500)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest; the fit is deterministic")
    p.add_argument("--threads", type=int, default=None, help="accepted for uniformity; unused")
    p.set_defaults(func=cmd_background)

    p = sub.add_parser("inpaint", help="blind inpainting of a PGM image", formatter_class=fmt_cls)
    p.add_argument("image")
    p.add_argument("--out", required=True, help="restored PGM path")
    p.add_argument("--metrics", default=None, help="metrics JSON path (default stdout)")
    p.add_argument("--dictionary", default=None, help="CSV or binary container; default overcomplete DCT")
    p.add_argument("--atoms", type=int, default=None, help="DCT atom count (default: patch pixel count)")
    p.add_argument("--patch", type=int, default=8)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=0.01)
    p.add_argument("--tau", type=float, default=None, help="explicit tau (default mad-scaled rule)")
    p.add_argument("--tau-c", type=float, default=1.0)
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--no-center", action="store_true", help="code raw patches instead of median-centred ones")
    p.add_argument("--truth", default=None, help="clean PGM for PSNR reporting")
    p.add_argument("--seed", type=int, default=0, help="recorded in the manifest; the fit is deterministic")
    p.add_argument("--threads", type=int, default=None, help="accepted for uniformity; unused")
    p.set_defaults(func=cmd_inpaint)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        args.func(args, started)
    except INPUT_ERRORS as exc:
        print(f"acls {args.command}: input error: {exc}", file=sys.stderr)
        return 2
    except AclsError as exc:
        print(f"acls {args.command}: computation error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
