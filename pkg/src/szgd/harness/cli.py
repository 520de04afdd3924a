"""Command-line entry point ``szgd``.

Exit status is 0 on success, 1 when a run fails or a ``--strict`` check
fails, and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from .. import __version__, _backend
from ..errors import SZGDError
from ..estimator import (
    bias_bound_smooth,
    empirical_bias_variance,
    variance_bound_smooth,
)
from ..objectives import PowerQuadratic, make_random_psd, norm_cubed
from ..rates import fit_geometric, fit_power_law
from ..rng import RngStream
from ..stiefel import sample_stiefel_batch, second_moment_check
from .config import ConfigError, load_config
from .experiment import read_csv_columns, run_experiment
from .reproduce import FIGURES, reproduce


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def cmd_sample_stats(args) -> int:
    rng = RngStream(args.seed)
    frames = sample_stiefel_batch(args.n, args.k, args.frames, rng.substream(0))
    eye = np.eye(args.k)
    err = float(np.abs(np.einsum("mik,mil->mkl", frames, frames) - eye).max())
    ok_orth = err <= args.orth_tol
    print(f"orthonormality: frames={args.frames} n={args.n} k={args.k} "
          f"max|V^T V - I|={err:.3e} tol={args.orth_tol:g} {_verdict(ok_orth)}")
    res = second_moment_check(args.n, args.samples, rng.substream(1))
    ok_mom = res.max_deviation <= args.moment_tol
    print(f"second moment: n={args.n} samples={args.samples} max|E[vv^T] - I/n|="
          f"{res.max_deviation:.4f} tol={args.moment_tol:g} {_verdict(ok_mom)}")
    return 0 if (ok_orth and ok_mom) or not args.strict else 1


def _bias_objective(args, rng):
    if args.objective == "norm_cubed":
        return norm_cubed(args.n)
    return PowerQuadratic(make_random_psd(args.n, args.eigen_mean, rng), 1.0)


def cmd_estimator_stats(args) -> int:
    rng = RngStream(args.seed)
    f = _bias_objective(args, rng.substream(0))
    g = rng.substream(1).standard_normal(args.n)
    x = args.radius * g / np.linalg.norm(g)
    # local smoothness on the ball that contains every probe
    L = f.local_smoothness(args.radius + args.delta)
    bv = empirical_bias_variance(f, x, args.delta, args.k, args.trials, rng.substream(2))
    b_bound = bias_bound_smooth(L, args.n, args.delta)
    if args.objective == "quadratic":
        b_bound = 0.0
    gn = float(np.linalg.norm(bv.gradient))
    v_bound = variance_bound_smooth(L, args.n, args.k, args.delta, gn)
    ok_b = bv.bias_norm <= b_bound + 3 * bv.bias_norm_se
    ok_v = bv.variance <= v_bound + 3 * bv.variance_se
    print(f"objective={f.name} n={args.n} k={args.k} delta={args.delta:g} trials={args.trials} L={L:.6g}")
    print(f"bias: empirical={bv.bias_norm:.6g} se={bv.bias_norm_se:.3g} bound={b_bound:.6g} {_verdict(ok_b)}")
    print(f"variance: empirical={bv.variance:.6g} se={bv.variance_se:.3g} bound={v_bound:.6g} {_verdict(ok_v)}")
    return 0 if (ok_b and ok_v) or not args.strict else 1


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    res = run_experiment(cfg, args.out)
    m = res.manifest
    print(f"{cfg.label}: {m['runs_completed']} completed, {m['runs_diverged']} diverged, "
          f"{m['runs_aborted']} aborted")
    if res.stats is not None:
        print(f"mean f(x_0)={res.stats.mean_f[0]:.6g} mean f(x_T)={res.stats.mean_f[-1]:.6g}")
    if args.out:
        print(f"wrote {args.out}")
    return 0 if m["runs_completed"] == cfg.runs or not args.strict else 1


def _has_header(path: str) -> bool:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip().split(",")
    try:
        [float(v) for v in first]
    except ValueError:
        return True
    return False


def _load_series(path: str, column: str | None):
    """Series from a headed CSV (``t`` column used as abscissa) or bare numbers."""
    if not _has_header(path):
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        if data.shape[1] == 1:
            return None, data[:, 0]
        return data[:, 0], data[:, 1]
    cols = read_csv_columns(path)
    if column is None:
        names = [c for c in cols if c != "t"]
        column = "f_value" if "f_value" in cols else "mean_f" if "mean_f" in cols else names[0]
    if column not in cols:
        raise ConfigError(f"column {column!r} not in {list(cols)}")
    return cols.get("t"), cols[column]


def cmd_rates(args) -> int:
    times, y = _load_series(args.csv, args.column)
    window = None
    if args.start is not None or args.end is not None:
        index = np.arange(len(y)) if times is None else times
        lo = 0 if args.start is None else int(np.searchsorted(index, args.start))
        hi = len(y) - 1 if args.end is None else int(np.searchsorted(index, args.end, side="right")) - 1
        window = (lo, hi)
    fit = (fit_power_law if args.model == "power_law" else fit_geometric)(y, window, times=times)
    name = "exponent" if fit.model == "power_law" else "slope"
    print(f"{name} {fit.parameter:.3f} r2 {fit.r_squared:.3f}")
    print(fit.to_record())
    return 0


def cmd_reproduce(args) -> int:
    overrides = {}
    if args.T is not None:
        overrides["T"] = args.T
    if args.runs is not None:
        overrides["runs"] = args.runs
    res = reproduce(args.figure, seed=args.seed, out=args.out, **overrides)
    for c in res.checks:
        print(c.line())
    for path in res.files:
        print(f"wrote {path}")
    return 0 if res.ok or not args.strict else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="szgd", description="Zeroth-order optimization toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({_backend.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample-stats", help="orthonormality and second-moment checks of the sampler")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--orth-tol", type=float, default=1e-10)
    p.add_argument("--moment-tol", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="exit 1 when a check fails")
    p.set_defaults(func=cmd_sample_stats)

    p = sub.add_parser("estimator-stats", help="empirical bias and variance against the bounds")
    p.add_argument("--objective", choices=("norm_cubed", "quadratic"), default="norm_cubed")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--radius", type=float, default=1.0, help="norm of the evaluation point")
    p.add_argument("--eigen-mean", type=float, default=5.0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_estimator_stats)

    p = sub.add_parser("optimize", help="run an experiment from a key = value config file")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--strict", action="store_true", help="exit 1 unless every run completes")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("rates", help="fit a decay law to a CSV column")
    p.add_argument("csv")
    p.add_argument("--column", default=None)
    p.add_argument("--model", choices=("power_law", "geometric"), default="power_law")
    p.add_argument("--start", type=float, default=None, help="first t of the window")
    p.add_argument("--end", type=float, default=None, help="last t of the window")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("reproduce", help="run a figure pipeline end to end")
    p.add_argument("--figure", choices=FIGURES, required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="szgd_out")
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--strict", action="store_true", help="exit 1 when a required check fails")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return int(args.func(args))
    except (SZGDError, ValueError, OSError) as exc:
        print(f"szgd {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
