"""Named, counter-based random streams.

Every stochastic stage draws from its own stream keyed by ``(seed, label)``
so switching one stage on or off never shifts another stage's draws.
"""

from __future__ import annotations

import numpy as np

STREAM_LABELS = ("init", "dropout", "resample", "shuffle", "split")


class RngStream:
    """A Philox generator keyed by a seed and a stream label."""

    def __init__(self, seed: int, label: str, *, sub: int = 0):
        if label not in STREAM_LABELS:
            raise ValueError(f"unknown stream label {label!r}; expected one of {STREAM_LABELS}")
        self.seed = int(seed)
        self.label = label
        self.sub = int(sub)
        code = STREAM_LABELS.index(label)
        key = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, code, self.sub]).generate_state(2, np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def substream(self, sub: int) -> "RngStream":
        """Independent stream under the same label, e.g. one per fold."""
        return RngStream(self.seed, self.label, sub=sub)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, label={self.label!r}, sub={self.sub})"


def stream(seed: int, label: str) -> RngStream:
    return RngStream(seed, label)
