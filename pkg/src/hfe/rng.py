"""Deterministic pseudo-randomness.

Every random draw in the package flows through a numpy ``Generator`` backed
by the PCG64 bit generator. PCG64 is a published, named algorithm with
portable reference implementations, so identically seeded runs are
bit-identical across platforms for a pinned numpy version. Generator state
is a plain dict of integers and round-trips through JSON, which is what the
checkpoint format relies on.

Streams are single-owner. To use randomness from several places, derive
independent substreams with ``spawn_rng`` instead of sharing one generator.
"""

from __future__ import annotations

import copy

import numpy as np

_SEED_MASK = (1 << 64) - 1  # negative seeds map to their unsigned 64-bit form


def seeded_rng(seed: int) -> np.random.Generator:
    """Return a fresh PCG64 stream for ``seed`` (any Python int)."""
    return np.random.Generator(np.random.PCG64(int(seed) & _SEED_MASK))


def spawn_rng(seed: int, stream: int) -> np.random.Generator:
    """Derive the ``stream``-th independent substream of ``seed``.

    Uses numpy's SeedSequence spawn-key mechanism, so substreams with
    different ``stream`` indices are statistically independent and stable
    across runs.
    """
    seq = np.random.SeedSequence(entropy=int(seed) & _SEED_MASK, spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(seq))


def rng_state(rng: np.random.Generator) -> dict:
    """Snapshot the generator state as a JSON-serializable dict."""
    return copy.deepcopy(rng.bit_generator.state)


def rng_from_state(state: dict) -> np.random.Generator:
    """Rebuild a generator that continues exactly from ``state``."""
    bg = np.random.PCG64()
    bg.state = state
    return np.random.Generator(bg)
