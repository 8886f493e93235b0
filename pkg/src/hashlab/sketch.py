"""One permutation hashing with densification, and feature hashing.

Raw OPH sketches are ``uint64`` arrays of length ``k`` where an empty bin
holds the all-ones sentinel :data:`EMPTY`. Densified sketches have the same
dtype and never contain the sentinel.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .hashcore import HashFunction, _as_keys

EMPTY = 0xFFFFFFFFFFFFFFFF
DEFAULT_OFFSET = 1 << 32

INDEPENDENT = "independent"
COMBINED = "combined"


class AllBinsEmpty(ValueError):
    """Densification needs at least one non-empty bin."""


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class OphParams:
    k: int
    offset_c: int = DEFAULT_OFFSET

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (-(-(1 << 32) // self.k) <= self.offset_c < (1 << 64)):
            raise ValueError("offset_c must be at least ceil(2**32 / k) and fit in 64 bits")


@dataclass(frozen=True)
class FhParams:
    d_prime: int
    sign_mode: str = INDEPENDENT

    def __post_init__(self):
        if self.d_prime < 1:
            raise ValueError("d_prime must be >= 1")
        if self.sign_mode not in (INDEPENDENT, COMBINED):
            raise ValueError(f"unknown sign mode {self.sign_mode!r}")
        if self.sign_mode == COMBINED and self.d_prime & (self.d_prime - 1):
            raise ValueError("combined sign mode needs d_prime a power of two")


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Sorted, duplicate-free ``(index, weight)`` pairs."""

    indices: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.size and (idx.min() < 0 or idx.max() > 0xFFFFFFFF):
            raise ValueError("indices must be 32-bit unsigned")
        idx = np.ascontiguousarray(idx, dtype=np.uint32).ravel()
        w = np.ones(idx.shape, dtype=np.float64) if self.weights is None else \
            np.ascontiguousarray(self.weights, dtype=np.float64).ravel()
        if w.shape != idx.shape:
            raise ValueError("indices and weights differ in length")
        if idx.size > 1 and not np.all(idx[1:] > idx[:-1]):
            raise ValueError("indices must be strictly increasing")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_pairs(cls, pairs) -> SparseVector:
        pairs = list(pairs)
        return cls(np.array([i for i, _ in pairs], dtype=np.int64),
                   np.array([w for _, w in pairs], dtype=np.float64))

    def pairs(self) -> list[tuple[int, float]]:
        return [(int(i), float(w)) for i, w in zip(self.indices, self.weights)]

    def __len__(self):
        return self.indices.shape[0]

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (np.array_equal(self.indices, other.indices)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def norm(self) -> float:
        return math.sqrt(float(np.dot(self.weights, self.weights)))

    def normalized(self) -> SparseVector:
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return SparseVector(self.indices, self.weights / nrm)


# ---------------------------------------------------------------------------
# OPH

def oph_build(keys, h: HashFunction, params: OphParams) -> np.ndarray:
    """Raw one-permutation sketch of the set ``keys``.

    Bin ``h(x) % k`` keeps the minimum of ``h(x) // k``.
    """
    return _kernels.oph_bins(h.hash_array(_as_keys(keys)), params.k)


def random_directions(rng: np.random.Generator, k: int) -> np.ndarray:
    """One densification direction bit per bin (0 = left, 1 = right)."""
    return rng.integers(0, 2, size=k, dtype=np.uint8)


def oph_densify(sketch: np.ndarray, directions: np.ndarray, params: OphParams) -> np.ndarray:
    """Fill each empty bin from the nearest non-empty bin in its direction.

    The copied value is increased by ``j * offset_c`` where ``j`` is the
    circular distance walked.
    """
    sketch = np.ascontiguousarray(sketch, dtype=np.uint64)
    directions = np.ascontiguousarray(directions, dtype=np.uint8)
    if sketch.shape != (params.k,) or directions.shape != (params.k,):
        raise LengthMismatch("sketch and direction bits must both have length k")
    if np.all(sketch == np.uint64(EMPTY)):
        raise AllBinsEmpty("every bin is empty; was the input set empty?")
    return _kernels.densify(sketch, directions, np.uint64(params.offset_c))


def estimate_similarity(s1: np.ndarray, s2: np.ndarray) -> float:
    """Fraction of bins on which two densified sketches agree."""
    s1, s2 = np.asarray(s1), np.asarray(s2)
    if s1.shape != s2.shape:
        raise LengthMismatch(f"sketch lengths differ: {s1.shape} vs {s2.shape}")
    return float(np.count_nonzero(s1 == s2)) / s1.shape[0]


def sketch_to_bytes(sketch: np.ndarray) -> bytes:
    """Little-endian: a ``uint64`` length followed by the bin values."""
    sketch = np.asarray(sketch, dtype="<u8")
    return struct.pack("<Q", sketch.shape[0]) + sketch.tobytes()


def sketch_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < 8:
        raise ValueError("truncated sketch header")
    (k,) = struct.unpack_from("<Q", data)
    if len(data) != 8 + 8 * k:
        raise ValueError(f"sketch payload holds {(len(data) - 8) / 8} values, header says {k}")
    return np.frombuffer(data, dtype="<u8", offset=8).astype(np.uint64)


# ---------------------------------------------------------------------------
# feature hashing

def feature_hash(v: SparseVector, h: HashFunction, sign_h, params: FhParams) -> np.ndarray:
    """Hash ``v`` down to ``params.d_prime`` dimensions.

    In independent mode ``h`` picks the bin (``h(j) % d'``) and the parity
    of ``sign_h(j)`` picks the sign, odd meaning negative. In combined mode
    ``sign_h`` is ignored and one output of ``h`` supplies both: its low
    ``log2(d')`` bits are the bin and the next bit the sign.
    """
    if params.sign_mode == COMBINED:
        hashes = h.hash_array(v.indices)
        return _kernels.feature_hash_combined(
            v.indices, v.weights, hashes, params.d_prime.bit_length() - 1)
    if sign_h is None:
        raise ValueError("independent sign mode needs a sign hash")
    return _kernels.feature_hash_independent(
        v.indices, v.weights, h.hash_array(v.indices), sign_h.hash_array(v.indices),
        params.d_prime)


def norm_sq(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(x, x))
