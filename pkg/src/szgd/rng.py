"""Seeded random streams.

Every source of randomness in the package goes through :class:`RngStream`, a
thin wrapper around :class:`numpy.random.Generator` (PCG64) whose state is
derived from ``SeedSequence(seed, spawn_key=(stream_id, *path))``. Equal
``(seed, stream_id, path)`` triples give identical draws on every platform
numpy supports, and distinct stream ids give statistically independent
streams, so parallel runs never share state.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Parameters
    ----------
    seed : int
        Base seed (any integer; reduced modulo 2**64).
    stream_id : int
        Distinguishes independent streams sharing a seed.
    path : tuple of int
        Sub-stream path below ``stream_id``; see :meth:`substream`.
    """

    __slots__ = ("seed", "stream_id", "path", "_gen")

    def __init__(self, seed: int, stream_id: int = 0, path: tuple[int, ...] = ()):
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self.path = tuple(int(p) & _MASK64 for p in path)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        tail = f", path={self.path}" if self.path else ""
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}{tail})"

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def substream(self, index: int) -> "RngStream":
        """Return a fresh, independent stream one level below this one.

        The child depends only on the identity of the parent, not on how many
        numbers the parent has already produced.
        """
        return RngStream(self.seed, self.stream_id, self.path + (index,))

    def identity(self) -> str:
        path = "/".join(str(p) for p in self.path)
        return f"{self.seed}:{self.stream_id}" + (f":{path}" if path else "")

    # Thin forwarding layer; only the draws the package needs.
    def standard_normal(self, size=None) -> np.ndarray:
        return self._gen.standard_normal(size)

    def exponential(self, scale: float = 1.0, size=None) -> np.ndarray:
        return self._gen.exponential(scale, size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)


def as_stream(rng) -> RngStream | np.random.Generator:
    """Accept an :class:`RngStream`, a numpy ``Generator`` or an integer seed."""
    if isinstance(rng, (RngStream, np.random.Generator)):
        return rng
    if rng is None:
        raise ValueError("an explicit RngStream or seed is required")
    return RngStream(int(rng))
