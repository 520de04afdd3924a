"""Decay-law fits for trajectory series.

Geometric decay ``y_t ~ C q^t`` is fitted as a line through ``(t, log y_t)``
and power-law decay ``y_t ~ C t^alpha`` as a line through
``(log t, log y_t)``. Windows are inclusive index ranges into the series,
where the index equals the iteration number ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

CLIP_FLOOR = 1e-300
DEFAULT_BURN_IN = 0.2


@dataclass(frozen=True)
class RateFit:
    """Least-squares decay fit.

    ``parameter`` is the slope of ``log y`` against ``t`` for the geometric
    model (fitted base ``exp(parameter)``) and against ``log t`` for the
    power-law model (the exponent).
    """

    model: str
    parameter: float
    intercept: float
    r_squared: float
    window: tuple[int, int]
    clip_count: int = 0
    points: int = 0

    @property
    def base(self) -> float:
        if self.model != "geometric":
            raise AttributeError("only geometric fits have a base")
        return math.exp(self.parameter)

    def to_record(self) -> str:
        return (f"model={self.model} parameter={self.parameter:.17g} intercept={self.intercept:.17g} "
                f"r_squared={self.r_squared:.17g} window={self.window[0]}:{self.window[1]} "
                f"clip_count={self.clip_count} points={self.points}")

    @classmethod
    def from_record(cls, text: str) -> "RateFit":
        kv = dict(item.split("=", 1) for item in text.split())
        a, b = kv["window"].split(":")
        return cls(kv["model"], float(kv["parameter"]), float(kv["intercept"]),
                   float(kv["r_squared"]), (int(a), int(b)), int(kv["clip_count"]),
                   int(kv["points"]))


def default_window(length: int, burn_in: float = DEFAULT_BURN_IN, start_min: int = 0) -> tuple[int, int]:
    """Window that drops the first ``burn_in`` fraction of iterations."""
    if length < 1:
        raise ValueError("empty series")
    last = length - 1
    start = max(start_min, int(math.ceil(burn_in * last)))
    return min(start, last), last


def tail_window(length: int, fraction: float, start_min: int = 0) -> tuple[int, int]:
    """The last ``fraction`` of a series (e.g. 0.5 for the second half)."""
    return default_window(length, 1.0 - fraction, start_min)


def _prepare(series, window, start_min: int, clip: bool, exclude_clipped: bool, times=None):
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("series must be a nonempty 1-d sequence")
    if times is not None:
        times = np.asarray(times, dtype=float)
        if times.shape != y.shape:
            raise ValueError("times and series differ in length")
    if window is None:
        if times is None:
            window = default_window(y.size, start_min=start_min)
        else:
            first = int(np.searchsorted(times, start_min))
            window = (min(max(first, int(math.ceil(DEFAULT_BURN_IN * (y.size - 1)))), y.size - 1),
                      y.size - 1)
    a, b = int(window[0]), int(window[1])
    if not 0 <= a <= b < y.size:
        raise ValueError(f"window {window} outside series of length {y.size}")
    t = np.arange(a, b + 1, dtype=float) if times is None else times[a:b + 1]
    if t[0] < start_min or (start_min > 0 and np.any(t <= 0)):
        raise ValueError(f"window must start at t >= {start_min}")
    w = y[a:b + 1]
    if not np.all(np.isfinite(w)):
        raise DomainError("non-finite value in fit window")
    bad = w < CLIP_FLOOR
    clipped = int(bad.sum())
    if clipped and not clip:
        raise DomainError(f"{clipped} nonpositive values in fit window")
    if exclude_clipped:
        t, w = t[~bad], w[~bad]
    else:
        w = np.maximum(w, CLIP_FLOOR)
    if t.size < 2:
        raise DomainError("fewer than two usable points in fit window")
    return t, np.log(w), (a, b), clipped


def _line(u: np.ndarray, v: np.ndarray) -> tuple[float, float, float]:
    um, vm = u.mean(), v.mean()
    du, dv = u - um, v - vm
    suu = float(du @ du)
    if suu == 0.0:
        raise DomainError("degenerate abscissa in fit")
    slope = float(du @ dv) / suu
    intercept = vm - slope * um
    ss_tot = float(dv @ dv)
    resid = v - (intercept + slope * u)
    ss_res = float(resid @ resid)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return slope, float(intercept), r2


def fit_geometric(series, window=None, *, clip: bool = True, exclude_clipped: bool = True,
                  times=None) -> RateFit:
    """Fit ``log y_t = intercept + slope * t``; a linear rate has slope < 0.

    ``window`` indexes positions in ``series``; ``times`` optionally gives
    the iteration number of each entry (default: its position).
    """
    t, ly, win, clipped = _prepare(series, window, 0, clip, exclude_clipped, times)
    slope, icpt, r2 = _line(t, ly)
    return RateFit("geometric", slope, icpt, r2, win, clipped, t.size)


def fit_power_law(series, window=None, *, clip: bool = True, exclude_clipped: bool = True,
                  times=None) -> RateFit:
    """Fit ``log y_t = intercept + alpha * log t`` on a window with ``t >= 1``."""
    t, ly, win, clipped = _prepare(series, window, 1, clip, exclude_clipped, times)
    slope, icpt, r2 = _line(np.log(t), ly)
    return RateFit("power_law", slope, icpt, r2, win, clipped, t.size)


def tail_square_sums(step_sq_norms) -> np.ndarray:
    """``S_t = sum_{s >= t} |x_{s+1} - x_s|^2`` truncated at the last step.

    The truncation makes ``S_t`` fall to the final term near the end of the
    series, so fits should use windows that end well before it.
    """
    s = np.asarray(step_sq_norms, dtype=float)
    if s.size == 0:
        return s.copy()
    out = np.cumsum(s[::-1])[::-1]
    # cumulative rounding can break exact monotonicity by an ulp
    return np.maximum.accumulate(out[::-1])[::-1]


def distance_series(trajectory, x_limit) -> tuple[np.ndarray, np.ndarray]:
    """Distances ``|x_t - x_limit|`` at the recorded iterate indices.

    Returns ``(indices, distances)``; thinned-out iterates are skipped.
    """
    x_limit = np.asarray(x_limit, dtype=float)
    d = np.linalg.norm(trajectory.iterates - x_limit, axis=1)
    return np.asarray(trajectory.iterate_index), d


def predicted_exponents(theta: float) -> dict[str, float]:
    """Power-law exponents expected for Lojasiewicz exponent ``theta > 1/2``."""
    if not 0.5 < theta < 1.0:
        raise ValueError("power-law rates apply for theta in (1/2, 1)")
    return {
        "f_value": 1.0 / (1.0 - 2.0 * theta),
        "tail_sum": 1.0 / (1.0 - 2.0 * theta),
        "distance": (1.0 - theta) / (1.0 - 2.0 * theta),
        "distance_alt": 2.0 * theta / (1.0 - 2.0 * theta),
    }
