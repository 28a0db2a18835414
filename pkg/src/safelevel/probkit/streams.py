"""Reproducible, splittable random streams.

Every stream is a pure function of ``(seed, stream_id)`` plus an optional
child path, so any consumer (a simulation replication, a worker thread)
can deterministically re-derive its own independent stream no matter how
work is scheduled.  Independence between ids comes from the seed-sequence
hash of the underlying generator (PCG64), the standard splittable-stream
construction.

Streams are single-owner: concurrency is achieved by giving each task its
own ``child``, never by sharing one stream between tasks.
"""
from __future__ import annotations

import numpy as np

__all__ = ["RandomStream"]


class RandomStream:
    """A deterministic substream of uniform variates keyed by (seed, stream_id)."""

    __slots__ = ("seed", "stream_id", "_path", "_bit_generator", "_generator")

    def __init__(self, seed: int, stream_id: int = 0, _path: tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
        if stream_id < 0 or stream_id >= 2**64:
            raise ValueError(
                f"stream_id must be a 64-bit unsigned integer, got {stream_id!r}"
            )
        self.seed = seed
        self.stream_id = stream_id
        self._path = _path
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream_id, *_path))
        self._bit_generator = np.random.PCG64(ss)
        self._generator = np.random.Generator(self._bit_generator)

    def child(self, *indices: int) -> "RandomStream":
        """Derive the independent substream at `indices` under this stream.

        Children are keyed by value, not by call order: ``child(3)`` is the
        same stream whether or not ``child(2)`` was ever created, and it is
        unaffected by any draws made from the parent.
        """
        for ix in indices:
            if ix < 0:
                raise ValueError(f"child indices must be non-negative, got {ix!r}")
        return RandomStream(self.seed, self.stream_id, self._path + tuple(indices))

    def next_double(self) -> float:
        """Next uniform variate on [0, 1)."""
        return self._generator.random()

    def next_doubles(self, n: int) -> np.ndarray:
        """Next `n` uniform variates on [0, 1) as an array.

        Consumes exactly the same underlying variates as `n` successive
        ``next_double`` calls, just without the per-call overhead.
        """
        if n < 0:
            raise ValueError(f"n must be non-negative, got {n!r}")
        return self._generator.random(n)

    @property
    def bit_generator(self) -> np.random.PCG64:
        """Underlying bit generator (consumed directly by the compiled kernels)."""
        return self._bit_generator

    def __repr__(self) -> str:
        path = f", path={self._path}" if self._path else ""
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}{path})"
