"""Seeded random streams shared by the Python step functions and the kernels.

A stream is a Philox counter-based generator keyed by (seed, rep). Raw 64-bit
words are pulled in blocks; bounded integers come from rejection sampling so
the numba kernels and the Python code consume words identically.
"""

from __future__ import annotations

import numpy as np

BLOCK = 1 << 16
_TOP = (1 << 64) - 1


def accept_limit(bound: int) -> int:
    """Largest raw word accepted when drawing uniformly from [0, bound)."""
    return _TOP - (((_TOP % bound) + 1) % bound)


class RandomStream:
    """Buffered raw words from Philox((seed, rep))."""

    def __init__(self, seed: int, rep: int = 0, block: int = BLOCK):
        if seed < 0 or rep < 0:
            raise ValueError("seed and rep must be non-negative")
        self.seed = int(seed)
        self.rep = int(rep)
        self.block = int(block)
        self._bitgen = np.random.Philox(np.random.SeedSequence([self.seed, self.rep]))
        self.buf = np.empty(0, dtype=np.uint64)
        self.pos = 0
        self._pybuf: list[int] = []

    def refill(self, minimum: int = 0) -> None:
        """Drop consumed words and append a fresh block (keeps unread ones)."""
        tail = self.buf[self.pos:]
        fresh = self._bitgen.random_raw(max(self.block, minimum))
        self.buf = np.concatenate([tail, fresh]).astype(np.uint64, copy=False)
        self.pos = 0
        self._pybuf = []

    def raw(self) -> int:
        if self.pos >= self.buf.shape[0]:
            self.refill()
        if not self._pybuf:
            self._pybuf = self.buf.tolist()
        r = self._pybuf[self.pos]
        self.pos += 1
        return r

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        lim = accept_limit(bound)
        while True:
            r = self.raw()
            if r <= lim:
                return r % bound

    def bernoulli(self, num: int, den: int) -> bool:
        return self.below(den) < num

    def sync_after_kernel(self, pos: int, buf: np.ndarray | None = None) -> None:
        if buf is not None and buf is not self.buf:
            self.buf = buf
            self._pybuf = []
        self.pos = pos
