"""Counter-based random streams.

Every random number in the package is a pure function of
``(seed, namespace, index)``:

* ``(seed, namespace)`` is mixed by :class:`numpy.random.SeedSequence` into a
  128-bit Philox-4x64 key.
* Draw ``i`` of the stream is the ``i``-th raw 64-bit word of that Philox
  stream (counter block ``i // 4``, lane ``i % 4``).
* A raw word ``r`` maps to the open-interval uniform
  ``u = ((r >> 11) + 0.5) * 2**-53``; a standard normal is ``ndtri(u)``
  (one uniform per normal, inverse CDF).

Dataset sample ``i`` in dimension ``K`` consumes draws ``i*K .. i*K+K-1``, so
growing ``N`` extends a dataset instead of reshuffling it, and any index
range can be generated independently of the others.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox, SeedSequence
from scipy.special import ndtri

NAMESPACES = {
    "train": 1,
    "eval": 2,
    "synth": 3,
    "trial": 4,
    "hash": 5,
}

_MASK64 = (1 << 64) - 1


def _ns_code(namespace) -> int:
    if isinstance(namespace, str):
        return NAMESPACES[namespace]
    return int(namespace)


def derive_seed(seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from ``seed`` and integer keys."""
    ss = SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def stream_key(seed: int, namespace) -> np.ndarray:
    ss = SeedSequence(int(seed) & _MASK64, spawn_key=(_ns_code(namespace),))
    return ss.generate_state(2, np.uint64)


def raw_words(seed: int, namespace, start: int, count: int) -> np.ndarray:
    """Raw 64-bit words ``start .. start+count-1`` of the keyed stream."""
    if count <= 0:
        return np.zeros(0, dtype=np.uint64)
    bg = Philox(key=stream_key(seed, namespace))
    block, lane = divmod(int(start), 4)
    if block:
        bg.advance(block)
    words = bg.random_raw(lane + int(count))
    return np.asarray(words, dtype=np.uint64)[lane:]


def words_to_uniform(words: np.ndarray) -> np.ndarray:
    """Map raw words to uniforms strictly inside (0, 1)."""
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniforms(seed: int, namespace, start: int, count: int) -> np.ndarray:
    return words_to_uniform(raw_words(seed, namespace, start, count))


def normals(seed: int, namespace, start: int, count: int) -> np.ndarray:
    return ndtri(uniforms(seed, namespace, start, count))


def splitmix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to uint64 values."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z
