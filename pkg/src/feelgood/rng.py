"""Counter-based random streams keyed by (seed, run, stream, round).

Every draw made for round ``t`` of stream ``s`` in run ``r`` comes from a
Philox block whose key is derived from ``(seed, r, s)`` and whose counter
starts at ``t * 2**192``.  Blocks never overlap, so the values seen in a
round do not depend on what other rounds, streams or runs consumed, nor on
the order in which runs execute.
"""
from __future__ import annotations

import numpy as np

__all__ = ["ENV", "AGENT", "SETUP", "RoundStream", "stream"]

# stream ids
ENV = 1
AGENT = 2
SETUP = 3

_MASK64 = (1 << 64) - 1


class RoundStream:
    """A Philox stream that can be positioned at the start of any round."""

    def __init__(self, seed: int, run_id: int, stream_id: int):
        self.seed = int(seed)
        self.run_id = int(run_id)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence([self.seed & _MASK64, self.run_id, self.stream_id])
        self._key = ss.generate_state(2, np.uint64)
        self._bitgen = np.random.Philox(key=self._key)
        self._gen = np.random.Generator(self._bitgen)
        self._counter = np.zeros(4, dtype=np.uint64)
        self._state = {
            "bit_generator": "Philox",
            "state": {"counter": self._counter, "key": self._key},
            "buffer": np.zeros(4, dtype=np.uint64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }

    def at(self, t: int) -> np.random.Generator:
        """Generator positioned at the first draw of round ``t``."""
        if t < 0:
            raise ValueError("round index must be nonnegative")
        self._counter[3] = t
        self._bitgen.state = self._state
        return self._gen

    def __repr__(self) -> str:
        return f"RoundStream(seed={self.seed}, run_id={self.run_id}, stream_id={self.stream_id})"


def stream(seed: int, run_id: int, stream_id: int) -> RoundStream:
    return RoundStream(seed, run_id, stream_id)
