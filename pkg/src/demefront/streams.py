"""Counter-based random streams for reproducible parallel Monte Carlo.

Every replicate owns a Philox key derived from (master seed, replicate
index); within a replicate, each (generation, purpose) pair gets its own
disjoint counter block.  Draws therefore depend only on those coordinates,
never on scheduling, so replicate batches reproduce bit-identically under
any thread count, and coupled engines can re-derive the exact same
uniforms for a shared site grid.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

__all__ = ["ReplicateStreams", "stream_for"]

# Purpose slots inside one generation.
REPRODUCTION = 0
MIGRATION = 1
ROUNDING = 2
COUPLE_UNIFORM = 3
COUPLE_SHARED = 4
COUPLE_EXTRA = 5
SCRATCH = 6


class ReplicateStreams:
    """Factory of per-(generation, purpose) generators for one replicate."""

    def __init__(self, master_seed: int, replicate: int = 0):
        self.master_seed = int(master_seed)
        self.replicate = int(replicate)
        seq = SeedSequence((self.master_seed, self.replicate))
        self._key = seq.generate_state(2, dtype=np.uint64)
        self._bg = Philox(key=self._key)
        self._gen = Generator(self._bg)
        self._counter = np.zeros(4, dtype=np.uint64)

    def stream(self, generation: int, purpose: int = SCRATCH) -> Generator:
        """Fresh independent generator for (generation, purpose)."""
        counter = np.zeros(4, dtype=np.uint64)
        counter[3] = np.uint64(generation)
        counter[2] = np.uint64(purpose)
        return Generator(Philox(counter=counter, key=self._key))

    def borrow(self, generation: int, purpose: int = SCRATCH) -> Generator:
        """Same stream as :meth:`stream` but reusing one generator object.

        Cheap (state reset, no allocation); the returned generator is only
        valid until the next ``borrow`` call on this instance.
        """
        self._counter[3] = np.uint64(generation)
        self._counter[2] = np.uint64(purpose)
        self._bg.state = {
            "bit_generator": "Philox",
            "state": {"counter": self._counter, "key": self._key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        return self._gen


def stream_for(master_seed: int, replicate: int, generation: int, purpose: int) -> Generator:
    return ReplicateStreams(master_seed, replicate).stream(generation, purpose)
