"""Splittable, seed-addressed random streams."""

from __future__ import annotations

import numpy as np


class RandomStream:
    """A numpy ``Generator`` addressed by ``(seed, stream_id path)``.

    Child streams are derived through :class:`numpy.random.SeedSequence`
    spawn keys, so a stream's output depends only on its address and never
    on which other streams were created or consumed first.  That is what
    lets trials run in any order, or in other processes, without changing
    results.
    """

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = ()):
        if isinstance(stream_id, (int, np.integer)):
            stream_id = (int(stream_id),)
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.stream_id = tuple(int(i) for i in stream_id)
        ss = np.random.SeedSequence(seed, spawn_key=self.stream_id)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, *ids: int) -> "RandomStream":
        return RandomStream(self.seed, self.stream_id + tuple(ids))

    def normal(self, shape) -> np.ndarray:
        return self.generator.standard_normal(shape)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"
