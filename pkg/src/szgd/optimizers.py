"""SZGD, gradient descent and the proximal point algorithm.

All three return a :class:`Trajectory`. Scalar series (function values,
squared step lengths, distances to the known minimizer) are stored at every
iteration; iterates are thinned by ``record_every``.

Power-quadratic objectives run through the compiled kernels; any other
:class:`~szgd.objectives.Objective` runs through the generic Python loop.
Both paths consume the random stream identically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .errors import DomainError, NonFiniteError, SZGDError
from .estimator import EstimatorConfig, delta_sequence, estimate_gradient
from .objectives import Objective, PowerQuadratic
from .proximal import ProxConfig, prox_solve
from .rng import RngStream
from .stiefel import sample_stiefel

DEFAULT_RADIUS_GUARD = 1e6
FRAME_SUBSTREAM = 1
_CHUNK = 1024

COMPLETED = "completed"
DIVERGED = "diverged"
ABORTED = "aborted"


@dataclass(frozen=True)
class OptimConfig:
    """Settings shared by SZGD and GD; the random stream is SZGD only.

    The SZGD frames come from ``RngStream(seed, stream_id).substream(1)``.
    """

    eta: float
    max_iters: int
    estimator: EstimatorConfig | None = None
    seed: int = 0
    stream_id: int = 0
    record_every: int = 1
    radius_guard: float = DEFAULT_RADIUS_GUARD

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")

    def frame_stream(self) -> RngStream:
        return RngStream(self.seed, self.stream_id).substream(FRAME_SUBSTREAM)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Record of one optimizer run.

    ``f_values`` and ``distances`` have ``steps + 1`` entries and
    ``step_sq_norms`` has ``steps`` entries, where ``steps`` equals the
    configured iteration count for a completed run. ``eval_count`` counts
    objective evaluations made by the algorithm itself (``2k`` per SZGD
    step); evaluations used only for recording ``f_values`` are excluded.
    """

    algorithm: str
    f_values: np.ndarray
    step_sq_norms: np.ndarray
    iterates: np.ndarray
    iterate_index: np.ndarray
    deltas: np.ndarray = field(default_factory=lambda: np.empty(0))
    distances: np.ndarray | None = None
    subgrad_norms: np.ndarray | None = None
    eval_count: int = 0
    grad_calls: int = 0
    k: int | None = None
    status: str = COMPLETED
    message: str = ""
    config: dict = field(default_factory=dict)
    rng_identity: str | None = None

    def __post_init__(self):
        for name in ("f_values", "step_sq_norms", "iterates", "iterate_index", "deltas",
                     "distances", "subgrad_norms"):
            a = getattr(self, name)
            if a is not None:
                a = np.array(a, copy=True)
                a.flags.writeable = False
                object.__setattr__(self, name, a)

    @property
    def steps(self) -> int:
        return len(self.step_sq_norms)

    @property
    def final_iterate(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def completed(self) -> bool:
        return self.status == COMPLETED

    def evals_per_step(self) -> int:
        if self.algorithm == "szgd":
            return 2 * int(self.k)
        if self.algorithm == "gd":
            return 1
        return 0


def _thin(iterates: np.ndarray, every: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(0, len(iterates), every)
    if idx[-1] != len(iterates) - 1:
        idx = np.append(idx, len(iterates) - 1)
    return iterates[idx], idx


def _stepsize_advice(f: Objective, cfg: OptimConfig, k: int | None) -> None:
    L = f.smooth_L
    if L is None:
        return
    n = f.dimension
    if k is not None:
        limit, label = 2.0 * k / (L * n), "2k/(Ln)"
    else:
        limit, label = 2.0 / L, "2/L"
    if not cfg.eta < limit:
        warnings.warn(f"eta={cfg.eta:g} is outside (0, {label}) = (0, {limit:.4g}) for {f.name}",
                      RuntimeWarning, stacklevel=3)


def _config_snapshot(algo: str, cfg, f: Objective) -> dict:
    snap = {"algorithm": algo, "objective": f.name, "n": f.dimension, "backend": _backend.BACKEND}
    for key, value in asdict(cfg).items():
        if isinstance(value, dict):
            snap.update({f"{key}.{k2}": v2 for k2, v2 in value.items()})
        else:
            snap[key] = value
    return snap


_STATUS_TEXT = {
    _backend.STATUS_OK: (COMPLETED, ""),
    _backend.STATUS_NONFINITE: (ABORTED, "non-finite iterate or function value"),
    _backend.STATUS_DIVERGED: (DIVERGED, "iterate left the radius guard"),
    _backend.STATUS_DOMAIN: (ABORTED, "gradient undefined at an iterate"),
}


def run_szgd(f: Objective, x0, cfg: OptimConfig) -> Trajectory:
    """Run stochastic zeroth-order gradient descent.

    ``x_{t+1} = x_t - eta * g_t`` with ``g_t`` the k-direction estimate at
    granularity ``delta_t`` and a fresh frame every iteration. The analytic
    gradient is never touched.
    """
    est = cfg.estimator
    if est is None:
        raise ValueError("SZGD needs an EstimatorConfig")
    x = np.array(x0, dtype=float)
    n = f.dimension
    if x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, objective dimension is {n}")
    if est.k > n:
        raise ValueError(f"k={est.k} exceeds dimension {n}")
    _stepsize_advice(f, cfg, est.k)
    T = int(cfg.max_iters)
    k = est.k
    deltas = delta_sequence(T, est)
    rng = cfg.frame_stream()
    x_limit = f.minimizer

    if type(f) is PowerQuadratic:
        f_parts, s_parts, d_parts, it_parts = [], [], [], []
        status, done = _backend.STATUS_OK, 0
        for start in range(0, T, _CHUNK):
            m = min(_CHUNK, T - start)
            G = rng.standard_normal((m, n, k))
            status, steps, fv, sv, dv, its = _backend.kernels.szgd_pq(
                f.Q, f.p, x, cfg.eta, deltas[start:start + m], G, x_limit, cfg.radius_guard)
            first = 0 if start == 0 else 1
            f_parts.append(fv[first:])
            d_parts.append(dv[first:])
            it_parts.append(its[first:])
            s_parts.append(sv)
            done += steps
            x = its[-1]
            if status != _backend.STATUS_OK:
                break
        f_values = np.concatenate(f_parts)
        dists = np.concatenate(d_parts)
        iterates = np.concatenate(it_parts)
        step_sq = np.concatenate(s_parts)
        state, message = _STATUS_TEXT[status]
    else:
        f_values = [f(x)]
        step_sq = []
        iters = [x.copy()]
        state, message = COMPLETED, ""
        for t in range(T):
            frame = sample_stiefel(n, k, rng)
            try:
                g = estimate_gradient(f, x, deltas[t], frame).vector
            except NonFiniteError as exc:
                state, message = ABORTED, str(exc)
                break
            x_new = x - cfg.eta * g
            fx = f(x_new)
            if not (np.all(np.isfinite(x_new)) and math.isfinite(fx)):
                state, message = _STATUS_TEXT[_backend.STATUS_NONFINITE]
                break
            dx = x_new - x
            step_sq.append(float(dx @ dx))
            x = x_new
            f_values.append(fx)
            iters.append(x.copy())
            if np.linalg.norm(x) > cfg.radius_guard:
                state, message = _STATUS_TEXT[_backend.STATUS_DIVERGED]
                break
        f_values = np.array(f_values)
        step_sq = np.array(step_sq)
        iterates = np.array(iters)
        done = len(step_sq)
        dists = None if x_limit is None else np.linalg.norm(iterates - x_limit, axis=1)

    kept, idx = _thin(iterates, cfg.record_every)
    return Trajectory(
        "szgd", f_values, step_sq, kept, idx,
        deltas=deltas[:done], distances=dists if x_limit is not None else None,
        eval_count=2 * k * done, k=k, status=state, message=message,
        config=_config_snapshot("szgd", cfg, f), rng_identity=rng.identity(),
    )


def run_gd(f: Objective, x0, cfg: OptimConfig) -> Trajectory:
    """Gradient descent ``x_{t+1} = x_t - eta * grad f(x_t)`` with constant step."""
    if not f.has_grad:
        raise ValueError(f"{f.name} has no analytic gradient")
    x = np.array(x0, dtype=float)
    n = f.dimension
    if x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, objective dimension is {n}")
    _stepsize_advice(f, cfg, None)
    T = int(cfg.max_iters)
    x_limit = f.minimizer

    if type(f) is PowerQuadratic:
        status, done, f_values, step_sq, dists, iterates = _backend.kernels.gd_pq(
            f.Q, f.p, x, cfg.eta, T, x_limit, cfg.radius_guard)
        state, message = _STATUS_TEXT[status]
    else:
        f_values = [f(x)]
        step_sq = []
        iters = [x.copy()]
        state, message = COMPLETED, ""
        for _ in range(T):
            try:
                g = f.gradient(x)
            except DomainError as exc:
                state, message = ABORTED, str(exc)
                break
            x_new = x - cfg.eta * g
            fx = f(x_new)
            if not (np.all(np.isfinite(x_new)) and math.isfinite(fx)):
                state, message = _STATUS_TEXT[_backend.STATUS_NONFINITE]
                break
            dx = x_new - x
            step_sq.append(float(dx @ dx))
            x = x_new
            f_values.append(fx)
            iters.append(x.copy())
            if np.linalg.norm(x) > cfg.radius_guard:
                state, message = _STATUS_TEXT[_backend.STATUS_DIVERGED]
                break
        f_values = np.array(f_values)
        step_sq = np.array(step_sq)
        iterates = np.array(iters)
        done = len(step_sq)
        dists = None if x_limit is None else np.linalg.norm(iterates - x_limit, axis=1)

    kept, idx = _thin(iterates, cfg.record_every)
    return Trajectory(
        "gd", f_values, step_sq, kept, idx,
        distances=dists if x_limit is not None else None,
        grad_calls=int(done), status=state, message=message,
        config=_config_snapshot("gd", cfg, f),
    )


def prox_step(f: Objective, x, cfg: ProxConfig) -> np.ndarray:
    """One proximal step ``argmin_z f(z) + |z - x|^2 / (2 eta)``."""
    return prox_solve(f, x, cfg).x


def run_proximal(f: Objective, x0, T: int, cfg: ProxConfig, record_every: int = 1,
                 radius_guard: float = DEFAULT_RADIUS_GUARD) -> Trajectory:
    """Iterate :func:`prox_step` ``T`` times.

    Records the implied subgradient norms ``|x_t - x_{t+1}| / eta``; the
    evaluation count is the total number of inner solver iterations.
    """
    if int(T) != T or T < 1:
        raise ValueError("T must be a positive integer")
    x = np.array(x0, dtype=float)
    f_values = [f(x)]
    step_sq, sub_norms, iters = [], [], [x.copy()]
    inner = 0
    state, message = COMPLETED, ""
    for _ in range(int(T)):
        try:
            res = prox_solve(f, x, cfg)
        except SZGDError as exc:
            state, message = ABORTED, str(exc)
            break
        inner += res.iterations
        dx = res.x - x
        step_sq.append(float(dx @ dx))
        sub_norms.append(float(np.linalg.norm(res.subgradient)))
        x = res.x
        f_values.append(f(x))
        iters.append(x.copy())
        if np.linalg.norm(x) > radius_guard:
            state, message = DIVERGED, "iterate left the radius guard"
            break
    iterates = np.array(iters)
    x_limit = f.minimizer
    dists = None if x_limit is None else np.linalg.norm(iterates - x_limit, axis=1)
    kept, idx = _thin(iterates, record_every)
    snap = {"algorithm": "proximal", "objective": f.name, "n": f.dimension, "T": int(T), **asdict(cfg)}
    return Trajectory(
        "proximal", np.array(f_values), np.array(step_sq), kept, idx,
        distances=dists, subgrad_norms=np.array(sub_norms), eval_count=inner,
        status=state, message=message, config=snap,
    )
