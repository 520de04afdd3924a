"""Multi-run experiments and their on-disk record.

Seeding
-------
The quadratic form is drawn from ``RngStream(seed, Q_STREAM)``. Run ``r``
uses ``stream_id = r``: its starting point comes from substream 0 and its
SZGD frames from substream 1, so every run can be re-executed on its own.

Output layout
-------------
``run_<r>.csv``  one row per iteration ``t``:
                 ``t,f_value,dist_to_limit,delta,step_sq_norm``.
                 ``delta`` and ``step_sq_norm`` describe the step from
                 ``t`` to ``t + 1`` and are ``nan`` on the last row.
``agg.csv``      ``t,mean_f,std_f,mean_dist,std_dist,evals`` over the
                 completed runs.
``Q.txt``        the serialized quadratic form.
``manifest.txt`` configuration, seeds, run statuses and code version.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import __version__, _backend
from ..estimator import EstimatorConfig
from ..objectives import PowerQuadratic, QuadraticForm, benchmark_function, make_random_psd
from ..optimizers import COMPLETED, OptimConfig, Trajectory, run_gd, run_proximal, run_szgd
from ..proximal import ProxConfig
from ..rng import RngStream
from .aggregate import AggregateStats, aggregate
from .config import ExperimentConfig

Q_STREAM = 2**32
X0_SUBSTREAM = 0
RUN_HEADER = "t,f_value,dist_to_limit,delta,step_sq_norm"
AGG_HEADER = "t,mean_f,std_f,mean_dist,std_dist,evals"


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    config: ExperimentConfig
    objective: PowerQuadratic
    trajectories: list
    stats: AggregateStats | None
    manifest: dict
    out_dir: str | None

    @property
    def completed(self) -> list:
        return [tr for tr in self.trajectories if tr.status == COMPLETED]


def build_form(cfg: ExperimentConfig) -> QuadraticForm:
    if cfg.objective == "norm_cubed" or cfg.q == "identity":
        return QuadraticForm.identity(cfg.n, 1.0 if cfg.objective == "norm_cubed" else cfg.q_scale)
    return make_random_psd(cfg.n, cfg.eigen_mean, RngStream(cfg.seed, Q_STREAM))


def build_objective(cfg: ExperimentConfig, form: QuadraticForm | None = None) -> PowerQuadratic:
    form = build_form(cfg) if form is None else form
    if cfg.objective in ("F1", "F2"):
        return benchmark_function(cfg.objective, form)
    p = 1.5 if cfg.objective == "norm_cubed" else cfg.p
    return PowerQuadratic(form, p)


def starting_point(cfg: ExperimentConfig, run: int) -> np.ndarray:
    """Fixed ``x0`` if configured, else uniform on the sphere of radius ``x0_radius``."""
    if cfg.x0 is not None:
        return np.array(cfg.x0, dtype=float)
    g = RngStream(cfg.seed, run).substream(X0_SUBSTREAM).standard_normal(cfg.n)
    return cfg.x0_radius * g / np.linalg.norm(g)


def run_single(cfg: ExperimentConfig, f: PowerQuadratic, run: int) -> Trajectory:
    x0 = starting_point(cfg, run)
    if cfg.algo == "proximal":
        return run_proximal(f, x0, cfg.T, ProxConfig(cfg.eta, inner_tol=cfg.inner_tol),
                            record_every=cfg.record_every, radius_guard=cfg.radius_guard)
    est = EstimatorConfig(cfg.k, cfg.delta0, cfg.delta_floor) if cfg.algo == "szgd" else None
    ocfg = OptimConfig(cfg.eta, cfg.T, est, seed=cfg.seed, stream_id=run,
                       record_every=cfg.record_every, radius_guard=cfg.radius_guard)
    return (run_szgd if cfg.algo == "szgd" else run_gd)(f, x0, ocfg)


def _num(x: float) -> str:
    return "%.17g" % x


def run_csv(tr: Trajectory) -> str:
    m = len(tr.f_values)
    dist = tr.distances if tr.distances is not None else np.full(m, np.nan)
    delta = np.full(m, np.nan)
    delta[:len(tr.deltas)] = tr.deltas
    step = np.full(m, np.nan)
    step[:len(tr.step_sq_norms)] = tr.step_sq_norms
    rows = [RUN_HEADER]
    for t in range(m):
        rows.append(f"{t},{_num(tr.f_values[t])},{_num(dist[t])},{_num(delta[t])},{_num(step[t])}")
    return "\n".join(rows) + "\n"


def agg_csv(stats: AggregateStats) -> str:
    rows = [AGG_HEADER]
    for i in range(len(stats)):
        rows.append(",".join([str(int(stats.t[i])), _num(stats.mean_f[i]), _num(stats.std_f[i]),
                              _num(stats.mean_dist[i]), _num(stats.std_dist[i]),
                              str(int(stats.evals[i]))]))
    return "\n".join(rows) + "\n"


def read_csv_columns(path) -> dict[str, np.ndarray]:
    """Read one of the CSV files above into ``{column: array}``."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        return {name: np.empty(0) for name in header}
    return {name: data[:, i] for i, name in enumerate(header)}


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def manifest_text(manifest: dict) -> str:
    return "".join(f"{key} = {manifest[key]}\n" for key in manifest)


def run_experiment(cfg: ExperimentConfig, out_dir: str | os.PathLike | None = None) -> ExperimentResult:
    """Execute ``cfg.runs`` independent runs and optionally persist them.

    Runs that diverge or abort are kept on disk with their status and left
    out of the aggregate. ``stats`` is ``None`` when no run completed.
    """
    form = build_form(cfg)
    f = build_objective(cfg, form)
    runs = range(cfg.runs)
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            trajs = list(pool.map(lambda r: run_single(cfg, f, r), runs))
        # results come back in run order, independent of scheduling
    else:
        trajs = [run_single(cfg, f, r) for r in runs]

    done = [tr for tr in trajs if tr.status == COMPLETED]
    stats = aggregate(done, label=cfg.label) if done else None

    manifest: dict = {"version": __version__, "backend": _backend.BACKEND}
    for line in cfg.to_text().splitlines():
        key, value = line.split(" = ", 1)
        manifest[f"config.{key}"] = value
    manifest["objective_name"] = f.name
    manifest["q_file"] = "Q.txt"
    manifest["q_stream"] = f"{cfg.seed}:{Q_STREAM}" if cfg.q == "random" and cfg.objective != "norm_cubed" else "none"
    manifest["x_limit"] = "known minimizer 0"
    manifest["runs_completed"] = len(done)
    manifest["runs_diverged"] = sum(tr.status == "diverged" for tr in trajs)
    manifest["runs_aborted"] = sum(tr.status == "aborted" for tr in trajs)
    for r, tr in enumerate(trajs):
        ident = RngStream(cfg.seed, r).identity()
        manifest[f"run_{r}.stream"] = ident
        manifest[f"run_{r}.status"] = tr.status
        manifest[f"run_{r}.steps"] = tr.steps
        manifest[f"run_{r}.eval_count"] = tr.eval_count
        manifest[f"run_{r}.grad_calls"] = tr.grad_calls
        if tr.message:
            manifest[f"run_{r}.message"] = tr.message

    out = None
    if out_dir is not None:
        out = os.fspath(out_dir)
        os.makedirs(out, exist_ok=True)
        for r, tr in enumerate(trajs):
            _write(os.path.join(out, f"run_{r}.csv"), run_csv(tr))
        if stats is not None:
            _write(os.path.join(out, "agg.csv"), agg_csv(stats))
        _write(os.path.join(out, "Q.txt"), form.to_text())
        _write(os.path.join(out, "manifest.txt"), manifest_text(manifest))
    return ExperimentResult(cfg, f, trajs, stats, manifest, out)
