"""Haar-uniform sampling of orthonormal k-frames and checks on the sampler."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend

ORTHONORMALITY_TOL = 1e-10


def _check_dims(n: int, k: int) -> None:
    if int(n) != n or int(k) != k:
        raise ValueError(f"dimensions must be integers, got n={n!r}, k={k!r}")
    if n < 1:
        raise ValueError(f"ambient dimension must be positive, got n={n}")
    if not 1 <= k <= n:
        raise ValueError(f"frame size must satisfy 1 <= k <= n, got k={k}, n={n}")


@dataclass(frozen=True, eq=False)
class StiefelFrame:
    """An ``n x k`` matrix with orthonormal columns (a point of St(n, k)).

    The array is made read-only on construction so frames can be shared
    between threads without copying.
    """

    columns: np.ndarray

    def __post_init__(self):
        cols = np.array(self.columns, dtype=np.float64, copy=True)
        if cols.ndim != 2:
            raise ValueError("a frame must be a 2-d array")
        _check_dims(cols.shape[0], cols.shape[1])
        cols.flags.writeable = False
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.columns if dtype is None else self.columns.astype(dtype)

    def orthonormality_error(self) -> float:
        """Max entry-wise deviation of ``V^T V`` from the identity."""
        return float(np.abs(self.columns.T @ self.columns - np.eye(self.k)).max())

    def flip(self, column: int) -> "StiefelFrame":
        """Copy of the frame with one column negated."""
        cols = self.columns.copy()
        cols[:, column] *= -1.0
        return StiefelFrame(cols)


def sample_stiefel(n: int, k: int, rng) -> StiefelFrame:
    """Draw one frame uniformly (Haar) from St(n, k).

    An ``n x k`` standard Gaussian matrix is QR-factored and each column of
    the orthogonal factor is multiplied by the sign of the matching diagonal
    entry of R. Without that correction the column signs are tied to the
    QR convention and the result is not Haar distributed.
    """
    _check_dims(n, k)
    G = rng.standard_normal((1, n, k))
    return StiefelFrame(_backend.kernels.stiefel_frames(G)[0])


def sample_stiefel_batch(n: int, k: int, count: int, rng, chunk: int = 8192) -> np.ndarray:
    """Draw ``count`` frames at once, returned as an array ``(count, n, k)``.

    Consumes the stream exactly like ``count`` successive calls to
    :func:`sample_stiefel`, so batched and sequential sampling agree.
    """
    _check_dims(n, k)
    if count < 0:
        raise ValueError("count must be nonnegative")
    out = np.empty((count, n, k))
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        out[start:stop] = _backend.kernels.stiefel_frames(rng.standard_normal((stop - start, n, k)))
    return out


def iter_stiefel_batches(n: int, k: int, count: int, rng, chunk: int = 8192):
    """Yield frames in chunks of at most ``chunk``; shape ``(m, n, k)`` each."""
    _check_dims(n, k)
    for start in range(0, count, chunk):
        m = min(chunk, count - start)
        yield _backend.kernels.stiefel_frames(rng.standard_normal((m, n, k)))


@dataclass(frozen=True)
class SecondMomentResult:
    """Empirical ``E[v v^T]`` together with its deviation from ``I / n``."""

    moment: np.ndarray
    standard_error: np.ndarray
    max_deviation: float
    samples: int


def _moment_stats(cols: list[np.ndarray], n: int, samples: int) -> SecondMomentResult:
    # cols: chunks of shape (m, n) holding one column per frame
    s1 = np.zeros((n, n))
    s2 = np.zeros((n, n))
    for c in cols:
        outer = c[:, :, None] * c[:, None, :]
        s1 += outer.sum(axis=0)
        s2 += (outer**2).sum(axis=0)
    mean = s1 / samples
    if samples > 1:
        var = np.maximum(s2 / samples - mean**2, 0.0) * samples / (samples - 1)
        se = np.sqrt(var / samples)
    else:
        se = np.full((n, n), np.inf)
    dev = float(np.abs(mean - np.eye(n) / n).max())
    return SecondMomentResult(mean, se, dev, samples)


def second_moment_check(n: int, samples: int, rng, k: int = 1) -> SecondMomentResult:
    """Empirical second moment of the first frame column over ``samples`` frames."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    chunks = [F[:, :, 0] for F in iter_stiefel_batches(n, k, samples, rng)]
    return _moment_stats(chunks, n, samples)


def marginal_uniformity_check(n: int, k: int, samples: int, rng) -> list[SecondMomentResult]:
    """Per-column second-moment statistics; each column should look uniform
    on the sphere, i.e. have ``E[v_i v_i^T] = I / n``."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    per_col: list[list[np.ndarray]] = [[] for _ in range(k)]
    for F in iter_stiefel_batches(n, k, samples, rng):
        for i in range(k):
            per_col[i].append(np.ascontiguousarray(F[:, :, i]))
    return [_moment_stats(chunks, n, samples) for chunks in per_col]
