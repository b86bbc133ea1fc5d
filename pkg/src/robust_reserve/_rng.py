"""Deterministic, splittable uniform streams built on a counter-based generator.

Every random quantity in the package is a pure function of ``(seed, index)``:
sample ``i`` of a stream always consumes the same underlying Philox counter
position, so any partition of ``[0, total)`` into chunks reproduces the
unchunked stream bit for bit.  That is what makes Monte Carlo results
independent of the worker count.
"""

from __future__ import annotations

import os

import numpy as np

# Philox-4x64 emits four 64-bit words per counter increment; ``advance``
# steps whole blocks, so stream offsets are realigned to block boundaries.
_WORDS_PER_BLOCK = 4

THREADS_ENV_VAR = "ROBUST_RESERVE_THREADS"


def uniform_stream(seed: int, start: int, count: int) -> np.ndarray:
    """Return the slice ``[start, start + count)`` of the uniform stream.

    The stream is the infinite sequence of U[0,1) doubles produced by a
    Philox generator keyed with ``seed``.  Slices taken with any chunk
    boundaries concatenate to the same sequence.
    """
    start = int(start)
    count = int(count)
    if start < 0 or count < 0:
        raise ValueError("stream offsets must be nonnegative")
    block, rem = divmod(start, _WORDS_PER_BLOCK)
    bits = np.random.Philox(key=int(seed) & ((1 << 128) - 1))
    if block:
        bits.advance(block)
    draws = np.random.Generator(bits).random(rem + count)
    return draws[rem:]


def worker_count(override: int | None = None) -> int:
    """Worker cap for parallel fan-out, from ROBUST_RESERVE_THREADS.

    ``override`` wins over the environment; both are clamped to at least 1.
    """
    if override is not None:
        return max(1, int(override))
    raw = os.environ.get(THREADS_ENV_VAR, "")
    if raw.strip():
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)
