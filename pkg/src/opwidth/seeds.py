"""Deterministic random-stream derivation.

Every randomized task in the library draws from a Philox (counter-based)
generator keyed by ``(root_seed, path...)`` where the path is the task name
followed by integer indices, e.g. ``stream(7, "fooling", trial)``.  Streams
derived from the same root seed and path are bit-identical across runs and
independent of evaluation order, so parallel shards and re-runs agree.
"""

import zlib

import numpy as np


def _as_word(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & 0xFFFFFFFF


def stream(root_seed: int, *path) -> np.random.Generator:
    """Generator for the stream addressed by (root_seed, *path)."""
    key = np.random.SeedSequence(
        entropy=int(root_seed) & 0xFFFFFFFFFFFFFFFF,
        spawn_key=tuple(_as_word(p) for p in path),
    )
    return np.random.Generator(np.random.Philox(key))


def spawn(root_seed: int, *path, count: int) -> list:
    """A list of `count` independent generators under one path."""
    return [stream(root_seed, *path, i) for i in range(count)]
