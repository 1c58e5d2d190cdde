"""Derived random streams.

Every random draw in the package flows through an :class:`RngStream`.  A
stream is identified by ``(master_seed, path)`` where ``path`` is a tuple of
logical indices (replicate number, tree number, cut-tree branch, ...).  The
child generator is seeded by ``numpy.random.SeedSequence(master_seed,
spawn_key=path)``, whose hash mixing is fixed by numpy, so a result depends
only on its logical position and never on scheduling or thread count.
"""
from __future__ import annotations

import numpy as np

MAX_SEED = 2**64 - 1


class RngStream:
    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed <= MAX_SEED:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        self._gen = None

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
            self._gen = np.random.Generator(np.random.PCG64(ss))
        return self._gen

    def child(self, *index: int) -> "RngStream":
        return RngStream(self.seed, self.path + tuple(int(i) for i in index))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path})"


def as_stream(rng) -> RngStream:
    """Accept an int seed or an existing stream."""
    if isinstance(rng, RngStream):
        return rng
    return RngStream(int(rng))
