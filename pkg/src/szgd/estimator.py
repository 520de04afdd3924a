"""Central-difference gradient estimator over random orthonormal directions.

For a frame ``V = [v_1, ..., v_k]`` drawn uniformly from St(n, k),

    g = n / (2 delta k) * sum_i (f(x + delta v_i) - f(x - delta v_i)) v_i

uses exactly ``2k`` evaluations of ``f``. The module also evaluates the
known bias and variance bounds of ``g`` and estimates both quantities by
Monte Carlo so the bounds can be checked empirically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DomainError, NonFiniteError, UnsupportedObjectiveError
from .objectives import Objective, PowerQuadratic
from .stiefel import StiefelFrame, iter_stiefel_batches, sample_stiefel


@dataclass(frozen=True)
class EstimatorConfig:
    """Direction count and granularity schedule ``delta_t = max(delta0 2^-t, floor)``."""

    k: int
    delta0: float = 1.0
    delta_floor: float = 1e-5

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not 0.0 < self.delta_floor <= self.delta0 <= 1.0:
            raise ValueError(
                f"need 0 < delta_floor <= delta0 <= 1, got delta0={self.delta0}, "
                f"delta_floor={self.delta_floor}"
            )


@dataclass(frozen=True)
class GradientEstimate:
    vector: np.ndarray
    delta_used: float
    k_used: int
    evals_used: int


def delta_schedule(t: int, cfg: EstimatorConfig) -> float:
    """Granularity at iteration ``t``: halving from ``delta0``, clamped below."""
    if t < 0:
        raise ValueError("iteration index must be nonnegative")
    # ldexp is exact, unlike delta0 * 0.5**t for large t
    return max(math.ldexp(cfg.delta0, -int(t)), cfg.delta_floor)


def delta_sequence(T: int, cfg: EstimatorConfig) -> np.ndarray:
    return np.array([delta_schedule(t, cfg) for t in range(T)], dtype=float)


def _frame_array(frame) -> np.ndarray:
    return frame.columns if isinstance(frame, StiefelFrame) else np.asarray(frame, dtype=float)


def _raise_nonfinite(x, delta, V, fp, fm):
    for i in range(V.shape[1]):
        for sign, vals in ((1.0, fp), (-1.0, fm)):
            if not np.isfinite(vals[i]):
                probe = x + sign * delta * V[:, i]
                raise NonFiniteError(
                    f"non-finite function value {vals[i]!r} at probe {i} ({'+' if sign > 0 else '-'})",
                    probe=probe, value=float(vals[i]),
                )


def estimate_gradient(f: Objective, x, delta: float, frame) -> GradientEstimate:
    """Estimate ``grad f(x)`` from the directions in ``frame``.

    Deterministic given the frame. Raises :class:`NonFiniteError` if any of
    the ``2k`` probe values is NaN or infinite.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    V = _frame_array(frame)
    x = np.asarray(x, dtype=float)
    n, k = V.shape
    if n != x.shape[0] or n != f.dimension:
        raise ValueError(f"dimension mismatch: frame is {n}x{k}, x has {x.shape[0]}, f has {f.dimension}")
    if type(f) is PowerQuadratic:
        fp, fm = _backend.kernels.pq_probe_values(f.Q, f.p, x, delta, V)
    else:
        vals = f.values(np.concatenate([x + delta * V.T, x - delta * V.T]))
        fp, fm = vals[:k], vals[k:]
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
        _raise_nonfinite(x, delta, V, fp, fm)
    g = (n / (2.0 * delta * k)) * (V @ (fp - fm))
    return GradientEstimate(g, float(delta), k, 2 * k)


def estimate_gradient_sampled(f: Objective, x, delta: float, k: int, rng) -> GradientEstimate:
    """Like :func:`estimate_gradient` but draws the frame from ``rng``."""
    return estimate_gradient(f, x, delta, sample_stiefel(f.dimension, k, rng))


def estimate_batch(f: Objective, x, delta: float, frames: np.ndarray) -> np.ndarray:
    """Estimates for a stack of frames ``(m, n, k)``; returns ``(m, n)``."""
    x = np.asarray(x, dtype=float)
    m, n, k = frames.shape
    if type(f) is PowerQuadratic:
        est = _backend.kernels.pq_estimates(f.Q, f.p, x, delta, frames)
    else:
        Vt = np.swapaxes(frames, 1, 2)
        probes = np.concatenate([x + delta * Vt, x - delta * Vt], axis=1).reshape(-1, n)
        vals = f.values(probes).reshape(m, 2 * k)
        diff = vals[:, :k] - vals[:, k:]
        est = (n / (2.0 * delta * k)) * np.einsum("mik,mk->mi", frames, diff)
    if not np.all(np.isfinite(est)):
        b = int(np.nonzero(~np.all(np.isfinite(est), axis=1))[0][0])
        estimate_gradient(f, x, delta, frames[b])  # raises with the probe
        raise NonFiniteError("non-finite gradient estimate", probe=x)
    return est


# -- bounds ------------------------------------------------------------------


def bias_bound_smooth(L: float, n: int, delta: float) -> float:
    """Bias bound ``L n delta / (n + 1)`` for L-smooth ``f``."""
    return L * n * delta / (n + 1)


def bias_bound_fourth(third_tensor_trace_norm: float, L4: float, n: int, delta: float) -> float:
    """Bias bound for (4, L4)-smooth ``f``.

    ``third_tensor_trace_norm`` is ``sqrt(sum_i (sum_j F_jji)^2)`` for the
    third derivative tensor ``F`` of ``f`` at ``x``.
    """
    return delta**2 / (2.0 * n) * third_tensor_trace_norm + delta**3 * L4 * n / 24.0


def _check_k(n: int, k: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")


def variance_bound_smooth(L: float, n: int, k: int, delta: float, grad_norm: float) -> float:
    """Variance bound for L-smooth ``f``:

    ``(n/k - 1) |g|^2 + (4 L delta / sqrt 3)(n^2/k - n) |g| + 4 L^2 n^2 delta^2 / (3k)``.
    """
    _check_k(n, k)
    return ((n / k - 1.0) * grad_norm**2
            + 4.0 * L * delta / math.sqrt(3.0) * (n * n / k - n) * grad_norm
            + 4.0 * L**2 * n**2 * delta**2 / (3.0 * k))


def variance_bound_fine(L3: float, n: int, k: int, delta: float, grad_norm: float) -> float:
    """Variance bound for (3, L3)-smooth ``f``; tighter in ``delta``."""
    _check_k(n, k)
    return ((n / k - 1.0) * grad_norm**2
            + L3 * delta**2 / 3.0 * (n * n / k - n) * grad_norm
            + L3**2 * n**2 * delta**4 / (36.0 * k))


# -- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class BiasVariance:
    """Monte Carlo statistics of the estimator at a point.

    ``bias`` is ``mean estimate - grad f(x)``; ``variance`` is the unbiased
    estimate of ``E |g - E g|^2``. Standard errors of the variance come
    from batch means.
    """

    mean: np.ndarray
    gradient: np.ndarray
    bias: np.ndarray
    bias_se: np.ndarray
    variance: float
    variance_se: float
    trials: int

    @property
    def bias_norm(self) -> float:
        return float(np.linalg.norm(self.bias))

    @property
    def bias_norm_se(self) -> float:
        """Scale of ``|bias|`` under pure noise: ``sqrt(sum_i se_i^2)``."""
        return float(np.sqrt(np.sum(self.bias_se**2)))


def empirical_bias_variance(f: Objective, x, delta: float, k: int, trials: int, rng,
                            batches: int = 50, chunk: int = 8192) -> BiasVariance:
    """Estimate bias and variance of the estimator over ``trials`` frames.

    Trials are split into ``batches`` contiguous groups; the spread of the
    per-group variances gives the standard error of the pooled variance.
    """
    if trials < 2:
        raise ValueError("need at least two trials")
    if not f.has_grad:
        raise UnsupportedObjectiveError(f"{f.name} has no analytic gradient to compare against")
    x = np.asarray(x, dtype=float)
    try:
        grad = f.gradient(x)
    except DomainError as exc:
        raise UnsupportedObjectiveError(str(exc)) from exc
    n = f.dimension
    batches = max(1, min(batches, trials // 2))
    est = np.empty((trials, n))
    pos = 0
    for frames in iter_stiefel_batches(n, k, trials, rng, chunk=chunk):
        m = frames.shape[0]
        est[pos:pos + m] = estimate_batch(f, x, delta, frames)
        pos += m
    mean = est.mean(axis=0)
    dev = est - mean
    sq = np.einsum("ij,ij->i", dev, dev)
    variance = float(sq.sum() / (trials - 1))
    bias_se = est.std(axis=0, ddof=1) / math.sqrt(trials)
    if batches > 1:
        groups = np.array_split(np.arange(trials), batches)
        group_var = np.array([
            np.sum((est[g] - est[g].mean(axis=0)) ** 2) / (len(g) - 1) for g in groups
        ])
        variance_se = float(group_var.std(ddof=1) / math.sqrt(batches))
    else:
        variance_se = float("inf")
    return BiasVariance(mean, grad, mean - grad, bias_se, variance, variance_se, trials)
