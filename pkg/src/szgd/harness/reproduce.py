"""End-to-end pipelines for the F1, F2 and evaluation-budget figures.

Every series shares one quadratic form and one set of starting points
(both depend on the seed only), so the series differ only in the
algorithm. Iteration count and starting radius default to
``T = 2000`` and ``|x0| = 10``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .. import __version__, _backend
from ..rates import fit_geometric, tail_window
from .config import ExperimentConfig
from .experiment import ExperimentResult, manifest_text, run_experiment
from .svg import emit_figure

K_VALUES = (1, 10, 20, 30)
DEFAULTS = dict(n=30, eta=0.005, T=2000, runs=10, eigen_mean=5.0, delta0=0.1,
                delta_floor=1e-5, x0_radius=10.0)
FIGURES = ("f1", "f2", "sample")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    required: bool = True

    def line(self) -> str:
        mark = ("PASS" if self.passed else "FAIL") if self.required else ("note" if self.passed else "miss")
        return f"[{mark}] {self.name}: {self.detail}"


@dataclass
class ReproduceResult:
    figure: str
    checks: list = field(default_factory=list)
    files: list = field(default_factory=list)
    experiments: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.required)


def _series_dir(label: str) -> str:
    return "gd" if label == "GD" else "k" + label.split("=")[1].strip()


def _run_series(objective: str, seed: int, out: str | None, include_gd: bool, overrides: dict):
    base = {**DEFAULTS, **overrides}
    configs = [ExperimentConfig(algo="szgd", k=k, objective=objective, seed=seed, **base)
               for k in K_VALUES]
    if include_gd:
        configs.append(ExperimentConfig(algo="gd", objective=objective, seed=seed, **base))
    results = {}
    for cfg in configs:
        sub = None if out is None else os.path.join(out, objective.lower(), _series_dir(cfg.label))
        results[cfg.label] = run_experiment(cfg, sub)
    return results


def _ratio_check(res: ExperimentResult, threshold: float, need: int) -> Check:
    ratios = [tr.f_values[-1] / tr.f_values[0] for tr in res.trajectories if tr.completed]
    hits = sum(r <= threshold for r in ratios)
    return Check(f"{res.config.label}: f(x_T) <= {threshold:g} f(x_0)",
                 hits >= need, f"{hits}/{len(res.trajectories)} runs (need {need})")


def _geometric_check(res: ExperimentResult) -> Check:
    if res.stats is None:
        return Check(f"{res.config.label}: geometric fit", False, "no completed runs")
    fit = fit_geometric(res.stats.mean_f, tail_window(len(res.stats), 0.5))
    ok = fit.parameter < 0 and fit.r_squared >= 0.9
    return Check(f"{res.config.label}: geometric fit on last 50% of mean f",
                 ok, f"slope={fit.parameter:.4g} r2={fit.r_squared:.4f}")


def _final_mean(res: ExperimentResult) -> float:
    return float(res.stats.mean_f[-1]) if res.stats is not None else float("nan")


def _ordering_checks(results: dict) -> list:
    """Per-iteration and per-evaluation comparison of the smallest and largest k."""
    small, large = results[f"k = {K_VALUES[0]}"], results[f"k = {K_VALUES[-1]}"]
    if small.stats is None or large.stats is None:
        return [Check("k ordering", False, "missing completed runs", False)]
    T = len(small.stats) - 1
    per_iter = Check(
        f"per iteration: k = {K_VALUES[-1]} ends below k = {K_VALUES[0]}",
        _final_mean(large) <= _final_mean(small),
        f"{_final_mean(large):.3e} vs {_final_mean(small):.3e} at t = {T}", False)
    budget = int(small.stats.evals[-1])
    t_large = budget // (2 * K_VALUES[-1])
    f_large = float(large.stats.mean_f[t_large])
    per_eval = Check(
        f"per evaluation: k = {K_VALUES[0]} below k = {K_VALUES[-1]} at {budget} evaluations",
        _final_mean(small) <= f_large,
        f"{_final_mean(small):.3e} vs {f_large:.3e}", False)
    return [per_iter, per_eval]


def _emit(out: str | None, name: str, stats, kind: str, x_axis: str, title: str, files: list):
    svg = emit_figure(stats, kind, x_axis, title)
    if out is not None:
        path = os.path.join(out, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)
        files.append(path)


def reproduce(figure: str, seed: int = 7, out: str | None = None, **overrides) -> ReproduceResult:
    """Run one pipeline; ``overrides`` replace entries of :data:`DEFAULTS`."""
    if figure not in FIGURES:
        raise ValueError(f"figure must be one of {FIGURES}, got {figure!r}")
    if out is not None:
        os.makedirs(out, exist_ok=True)
    result = ReproduceResult(figure)
    objectives = ("F1",) if figure == "f1" else ("F2",) if figure == "f2" else ("F1", "F2")
    x_axis = "evaluations" if figure == "sample" else "iterations"
    for obj in objectives:
        series = _run_series(obj, seed, out, include_gd=figure != "sample", overrides=overrides)
        result.experiments[obj] = series
        stats = [r.stats for r in series.values() if r.stats is not None]
        tag = obj.lower() if figure != "sample" else f"sample_{obj.lower()}"
        for kind in ("distance", "fvalue"):
            _emit(out, f"{tag}_{kind}.svg", stats, kind, x_axis, f"{obj}: {kind}", result.files)
        for label, res in series.items():
            bad = res.manifest["runs_diverged"] + res.manifest["runs_aborted"]
            result.checks.append(Check(f"{obj} {label}: runs completed", bad == 0,
                                       f"{res.manifest['runs_completed']} completed, {bad} not",
                                       required=False))
        if obj == "F1" and figure == "f1":
            result.checks.append(_geometric_check(series["GD"]))
            k_top = series[f"k = {K_VALUES[-1]}"]
            result.checks.append(_geometric_check(k_top))
            result.checks.append(_ratio_check(k_top, 1e-4, 9))
        result.checks.extend(Check(f"{obj} {c.name}", c.passed, c.detail, c.required)
                             for c in _ordering_checks(series))

    if out is not None:
        manifest = {"version": __version__, "backend": _backend.BACKEND, "figure": figure,
                    "seed": seed}
        manifest.update({f"default.{k}": v for k, v in {**DEFAULTS, **overrides}.items()})
        manifest["k_values"] = ",".join(map(str, K_VALUES))
        for i, c in enumerate(result.checks):
            manifest[f"check_{i}"] = c.line()
        path = os.path.join(out, "manifest.txt")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(manifest_text(manifest))
        result.files.append(path)
    return result


def mean_monotonicity_violations(series: np.ndarray, start: int) -> int:
    """Number of increases ``y_{t+1} > y_t`` for ``t >= start``."""
    y = np.asarray(series)[start:]
    return int(np.sum(y[1:] > y[:-1]))
