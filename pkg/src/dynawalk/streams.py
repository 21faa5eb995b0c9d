"""Counter-based random number streams.

A stream is identified by (master_seed, stream_index).  The pair is mixed
through SplitMix64 into a Philox key, so any number of statistically
independent streams can be derived without coordination, and a stream's
output depends only on its identity, never on scheduling or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One SplitMix64 output step for the 64-bit state ``x``."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngStream:
    """Identity of one reproducible random stream.

    ``generator()`` builds a fresh numpy Generator over Philox; calling it
    twice gives two generators that replay the identical sequence.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not (0 <= self.master_seed <= _MASK64):
            raise ValueError("master_seed must fit in 64 bits")

    def stream(self, index: int) -> "RngStream":
        """Derived stream for replication/task ``index`` under the same master seed."""
        return RngStream(self.master_seed, index)

    def key(self) -> int:
        return splitmix64(splitmix64(self.master_seed) ^ (self.stream_index & _MASK64))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key()))
