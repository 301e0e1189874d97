"""Counter-based random streams.

Every uniform draw is a pure function of ``(seed, stream_id, draw_index)``.
The generator is SplitMix64 used in counter mode: a stream key is derived
from ``(seed, stream_id)`` by two rounds of the SplitMix64 finalizer, and
draw ``i`` of the stream is the ``i``-th SplitMix64 output when the state is
seeded with that key.  Because draws are random-access, a bond's mark can be
looked up lazily (only the bonds touched by a cluster search are ever
generated) and it is the same mark a full sample would have produced.

Uniforms use the top 53 bits, so ``u`` lies in ``[0, 1)``; a bond is open
iff ``u < p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
STREAM_MULT = 0xD1B54A32D192ED03
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v <= _MASK:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    @property
    def key(self) -> int:
        return stream_key_py(self.seed, self.stream_id)

    def uniforms(self, count: int, start: int = 0) -> np.ndarray:
        return uniforms(self.key, count, start)


# Pure-Python reference implementation (used for tests and small lookups).

def fmix_py(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def splitmix64_py(state: int, count: int) -> list[int]:
    out = []
    for _ in range(count):
        state = (state + GOLDEN) & _MASK
        out.append(fmix_py(state))
    return out


def stream_key_py(seed: int, stream_id: int) -> int:
    base = fmix_py((seed + GOLDEN) & _MASK)
    return fmix_py((base + (stream_id + 1) * STREAM_MULT) & _MASK)


def draw_py(key: int, index: int) -> int:
    return fmix_py((key + (index + 1) * GOLDEN) & _MASK)


# Vectorised numpy version; uint64 array arithmetic wraps modulo 2**64.

def _fmix_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def raw_draws(key: int, count: int, start: int = 0) -> np.ndarray:
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return _fmix_np(np.uint64(key) + idx * np.uint64(GOLDEN))


def uniforms(key: int, count: int, start: int = 0) -> np.ndarray:
    return (raw_draws(key, count, start) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


# numba versions for the hot loops.

@numba.njit(inline="always")
def fmix(z):
    z = (z ^ (z >> numba.uint64(30))) * numba.uint64(_MIX1)
    z = (z ^ (z >> numba.uint64(27))) * numba.uint64(_MIX2)
    return z ^ (z >> numba.uint64(31))


@numba.njit(inline="always")
def stream_key(seed, stream_id):
    base = fmix(numba.uint64(seed) + numba.uint64(GOLDEN))
    return fmix(base + (numba.uint64(stream_id) + numba.uint64(1)) * numba.uint64(STREAM_MULT))


@numba.njit(inline="always")
def uniform(key, index):
    z = fmix(key + (numba.uint64(index) + numba.uint64(1)) * numba.uint64(GOLDEN))
    return numba.float64(z >> numba.uint64(11)) * 1.1102230246251565e-16
