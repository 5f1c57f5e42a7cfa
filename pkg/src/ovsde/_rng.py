"""Counter-based random numbers for reproducible, order-independent Monte Carlo.

Every trial owns a stream key derived from ``(base_seed, stream_id)``; the
k-th normal increment of a stream is a pure function of ``(key, k)``.  Any
path can therefore be regenerated in isolation and results do not depend on
scheduling or worker count.

The generator is the splitmix64 finalizer applied to a Weyl sequence, written
three times with identical integer semantics: pure Python (reference), numba
scalar (hot loops), and vectorized numpy (fallback backend).  All three agree
bit for bit on the uniform integers.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import NUMBA_AVAILABLE, njit

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_GAMMA_U = np.uint64(_GAMMA)
_MIX1_U = np.uint64(_MIX1)
_MIX2_U = np.uint64(_MIX2)
_TWO_NEG53 = 2.0**-53


def finalize_py(z: int) -> int:
    """Reference splitmix64 finalizer on Python ints (mod 2^64)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return (z ^ (z >> 31)) & _MASK


def stream_key(base_seed: int, stream_id: int) -> np.uint64:
    """Well-separated 64-bit key for one stream of one seeded experiment."""
    mixed = finalize_py(base_seed & _MASK) ^ finalize_py((stream_id + 0x632BE59BD9B4E019) & _MASK)
    return np.uint64(finalize_py(mixed))


def stream_keys(base_seed: int, stream_ids) -> np.ndarray:
    """Vectorized :func:`stream_key` over an array of stream ids."""
    ids = np.asarray(stream_ids, dtype=np.uint64)
    mixed = np.uint64(finalize_py(base_seed & _MASK)) ^ _finalize_np(
        ids + np.uint64(0x632BE59BD9B4E019)
    )
    return _finalize_np(mixed)


def _finalize_np(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1_U
    z = (z ^ (z >> np.uint64(27))) * _MIX2_U
    return z ^ (z >> np.uint64(31))


def uniforms_np(keys: np.ndarray, counter: int) -> np.ndarray:
    """Uniform (0, 1) draw number ``counter`` for every stream key, vectorized."""
    offset = np.uint64(((counter + 1) * _GAMMA) & _MASK)
    raw = _finalize_np(np.asarray(keys, dtype=np.uint64) + offset)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_NEG53


def normals_np(keys: np.ndarray, step: int) -> np.ndarray:
    """Standard normal for step ``step`` of every stream, by Box-Muller."""
    u1 = uniforms_np(keys, 2 * step)
    u2 = uniforms_np(keys, 2 * step + 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


def uniform_py(key: int, counter: int) -> float:
    """Scalar reference uniform, bit-identical to the numpy and numba paths."""
    raw = finalize_py((int(key) + (counter + 1) * _GAMMA) & _MASK)
    return ((raw >> 11) + 0.5) * _TWO_NEG53


def normal_py(key: int, step: int) -> float:
    u1 = uniform_py(key, 2 * step)
    u2 = uniform_py(key, 2 * step + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


if NUMBA_AVAILABLE:

    @njit(cache=True)
    def _finalize_nb(z):
        z = (z ^ (z >> np.uint64(30))) * _MIX1_U
        z = (z ^ (z >> np.uint64(27))) * _MIX2_U
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def uniform_nb(key, counter):
        raw = _finalize_nb(key + (counter + np.uint64(1)) * _GAMMA_U)
        return (np.float64(raw >> np.uint64(11)) + 0.5) * _TWO_NEG53

    @njit(cache=True)
    def normal_nb(key, step):
        u1 = uniform_nb(key, np.uint64(2) * step)
        u2 = uniform_nb(key, np.uint64(2) * step + np.uint64(1))
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

else:  # pragma: no cover - exercised only when numba is absent

    def uniform_nb(key, counter):
        return uniform_py(int(key), int(counter))

    def normal_nb(key, step):
        return normal_py(int(key), int(step))
