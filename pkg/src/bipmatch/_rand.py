"""Random-variate plumbing: buffered uniforms and child-seed derivation."""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["BufferedUniforms", "child_seed", "make_rng"]


class BufferedUniforms:
    """Uniform variates served from pre-drawn blocks of a Generator.

    Scalar draws from numpy generators dominate the step loops otherwise;
    one vectorized refill per block amortizes that away.  ``index(bound)``
    maps a uniform float to an integer in [0, bound); the 2^-53 bias of the
    multiply is far below anything the simulations can resolve.
    """

    __slots__ = ("_rng", "_block", "_buf", "_pos")

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        self._rng = rng
        self._block = block
        self._buf = rng.random(block)
        self._pos = 0

    def next(self) -> float:
        if self._pos == self._buf.size:
            self._buf = self._rng.random(self._block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def index(self, bound: int) -> int:
        return int(self.next() * bound)


def child_seed(root: int, *key) -> int:
    """Derive a 64-bit child seed from a root seed and a mixed key.

    String key parts are hashed with crc32 so keys stay order-sensitive,
    platform-independent and reproducible.  Children for distinct keys are
    independent streams; the derivation is associative-free, so parallel and
    serial execution see identical seeds.
    """
    entropy = [int(root) & 0xFFFFFFFF]
    for part in key:
        if isinstance(part, str):
            entropy.append(zlib.crc32(part.encode("utf-8")))
        else:
            entropy.append(int(part) & 0xFFFFFFFF)
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
