"""Basic 32-bit hash families.

Four families map 32-bit keys to 32-bit values:

* multiply-shift, ``((a*x + b) mod 2**64) >> 32``
* t-wise PolyHash, a random degree ``t-1`` polynomial modulo the Mersenne
  prime ``2**61 - 1``, truncated to its low 32 bits
* mixed tabulation with ``c = d = 4`` 8-bit characters
* MurmurHash3_x86_32 on the 4-byte little-endian key, as a reference

Every instance is immutable and knows how to evaluate a single Python int
(``h(x)``) and a whole ``uint32`` array (``h.hash_array(keys)``). The scalar
path is plain Python integer arithmetic and doubles as the readable
reference for the compiled array path.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels

MERSENNE_EXP = 61
P = (1 << MERSENNE_EXP) - 1
MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

#: Independence of the PolyHash used to fill mixed tabulation tables.
TABLE_FILL_INDEPENDENCE = 20


def mersenne_reduce(x: int) -> int:
    """Return ``x mod (2**61 - 1)`` for any ``0 <= x < 2**128``.

    Two rounds of ``x = (x & p) + (x >> 61)`` bring a 128-bit value below
    ``p + 64``; one conditional subtraction finishes the job.
    """
    x = (x & P) + (x >> MERSENNE_EXP)
    x = (x & P) + (x >> MERSENNE_EXP)
    if x >= P:
        x -= P
    return x


def _as_keys(keys) -> np.ndarray:
    arr = np.asarray(keys)
    if arr.dtype != np.uint32:
        if arr.size and (arr.min() < 0 or arr.max() > MASK32):
            raise ValueError("keys must lie in [0, 2**32)")
        arr = arr.astype(np.uint32)
    return np.ascontiguousarray(arr.ravel())


# ---------------------------------------------------------------------------
# families

@dataclass(frozen=True)
class MultiplyShift:
    a: int
    b: int

    name = "multiply-shift"

    def __post_init__(self):
        if not (0 <= self.a <= MASK64 and 0 <= self.b <= MASK64):
            raise ValueError("a and b must be 64-bit words")

    def __call__(self, x: int) -> int:
        return ((self.a * x + self.b) & MASK64) >> 32

    def hash_array(self, keys) -> np.ndarray:
        return _kernels.multiply_shift_array(
            _as_keys(keys), np.uint64(self.a), np.uint64(self.b))

    def checksum(self, keys: np.ndarray) -> int:
        return int(_kernels.multiply_shift_checksum(
            keys, np.uint64(self.a), np.uint64(self.b)))

    def dump_lines(self) -> list[str]:
        return [f"a 0x{self.a:016x}", f"b 0x{self.b:016x}"]


@dataclass(frozen=True)
class PolyHash:
    """t-wise independent polynomial hashing modulo ``2**61 - 1``.

    ``coeffs[i]`` multiplies ``x**i``. The 32-bit output is the low 32 bits
    of the value in ``[p]``, which is within ``2**-29`` of uniform.
    """

    coeffs: tuple[int, ...]
    _packed: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = tuple(int(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("PolyHash needs at least one coefficient")
        if any(not 0 <= c < P for c in coeffs):
            raise ValueError("coefficients must lie in [0, 2**61 - 1)")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "_packed", np.array(coeffs, dtype=np.uint64))

    @property
    def t(self) -> int:
        return len(self.coeffs)

    @property
    def name(self) -> str:
        return f"poly{self.t}"

    def raw(self, x: int) -> int:
        """Polynomial value in ``[p]``, Horner's rule with per-step reduction."""
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = mersenne_reduce(acc * x + c)
        return acc

    def __call__(self, x: int) -> int:
        return self.raw(x) & MASK32

    def raw_array(self, keys) -> np.ndarray:
        return _kernels.poly_raw_array(_as_keys(keys), self._packed)

    def hash_array(self, keys) -> np.ndarray:
        return _kernels.poly_array(_as_keys(keys), self._packed)

    def checksum(self, keys: np.ndarray) -> int:
        return int(_kernels.poly_checksum(keys, self._packed))

    def dump_lines(self) -> list[str]:
        return [f"a{i} 0x{c:016x}" for i, c in enumerate(self.coeffs)]


@dataclass(frozen=True, eq=False)
class MixedTab:
    """Mixed tabulation with four key characters and four derived characters.

    ``t1`` has shape ``(256, 4)`` of ``uint64`` and ``t2`` shape ``(256, 4)``
    of ``uint32``; both are indexed ``[character, position]``.
    """

    t1: np.ndarray
    t2: np.ndarray
    _flat: tuple = field(init=False, repr=False, compare=False)

    name = "mixed-tab"

    def __post_init__(self):
        t1 = np.ascontiguousarray(self.t1, dtype=np.uint64)
        t2 = np.ascontiguousarray(self.t2, dtype=np.uint32)
        if t1.shape != (256, 4) or t2.shape != (256, 4):
            raise ValueError("mixed tabulation tables must have shape (256, 4)")
        t1.flags.writeable = False
        t2.flags.writeable = False
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)
        object.__setattr__(self, "_flat", (t1.ravel(), t2.astype(np.uint64).ravel()))

    def __eq__(self, other):
        if not isinstance(other, MixedTab):
            return NotImplemented
        return np.array_equal(self.t1, other.t1) and np.array_equal(self.t2, other.t2)

    __hash__ = None

    def __call__(self, x: int) -> int:
        h = 0
        for i in range(4):
            h ^= int(self.t1[x & 0xFF, i])
            x >>= 8
        drv = h >> 32
        for i in range(4):
            h ^= int(self.t2[drv & 0xFF, i])
            drv >>= 8
        return h & MASK32

    def hash_array(self, keys) -> np.ndarray:
        return _kernels.mixedtab_array(_as_keys(keys), *self._flat)

    def checksum(self, keys: np.ndarray) -> int:
        return int(_kernels.mixedtab_checksum(keys, *self._flat))

    def dump_lines(self) -> list[str]:
        lines = []
        for i in range(4):
            for r in range(256):
                lines.append(f"t1[{r}][{i}] 0x{int(self.t1[r, i]):016x}")
        for i in range(4):
            for r in range(256):
                lines.append(f"t2[{r}][{i}] 0x{int(self.t2[r, i]):08x}")
        return lines


def _rotl32(x, r):
    return ((x << r) | (x >> (32 - r))) & MASK32


def murmur3_32(data: Union[bytes, int], seed: int = 0) -> int:
    """MurmurHash3_x86_32. An int is hashed as its 4-byte little-endian encoding."""
    if isinstance(data, (int, np.integer)):
        data = int(data).to_bytes(4, "little")
    c1, c2 = 0xCC9E2D51, 0x1B873593
    h = seed & MASK32
    n = len(data)
    nblocks = n // 4
    for i in range(nblocks):
        k = int.from_bytes(data[4 * i:4 * i + 4], "little")
        k = (k * c1) & MASK32
        k = _rotl32(k, 15)
        k = (k * c2) & MASK32
        h ^= k
        h = _rotl32(h, 13)
        h = (h * 5 + 0xE6546B64) & MASK32
    tail = data[4 * nblocks:]
    if tail:
        k = int.from_bytes(tail, "little")
        k = (k * c1) & MASK32
        k = _rotl32(k, 15)
        k = (k * c2) & MASK32
        h ^= k
    h ^= n
    h ^= h >> 16
    h = (h * 0x85EBCA6B) & MASK32
    h ^= h >> 13
    h = (h * 0xC2B2AE35) & MASK32
    h ^= h >> 16
    return h


@dataclass(frozen=True)
class Murmur3:
    seed: int

    name = "murmur3"

    def __call__(self, x: int) -> int:
        return murmur3_32(x, self.seed)

    def hash_array(self, keys) -> np.ndarray:
        return _kernels.murmur3_array(_as_keys(keys), np.uint64(self.seed))

    def checksum(self, keys: np.ndarray) -> int:
        return int(_kernels.murmur3_checksum(keys, np.uint64(self.seed)))

    def dump_lines(self) -> list[str]:
        return [f"seed 0x{self.seed:08x}"]


HashFunction = Union[MultiplyShift, PolyHash, MixedTab, Murmur3]


# ---------------------------------------------------------------------------
# family identifiers and seeding

@dataclass(frozen=True)
class FamilyId:
    """Names one family; ``t`` is only meaningful for PolyHash."""

    kind: str
    t: int = 0

    KINDS = ("multiply-shift", "poly", "mixed-tab", "murmur3")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown hash family kind {self.kind!r}")
        if self.kind == "poly" and self.t < 2:
            raise ValueError("PolyHash family needs t >= 2")
        if self.kind != "poly" and self.t:
            raise ValueError(f"{self.kind} takes no independence parameter")

    @classmethod
    def parse(cls, text: str) -> FamilyId:
        text = text.strip().lower()
        m = re.fullmatch(r"poly(?:hash)?-?(\d+)", text)
        if m:
            return cls("poly", int(m.group(1)))
        aliases = {"ms": "multiply-shift", "multiplyshift": "multiply-shift",
                   "mixedtab": "mixed-tab", "mt": "mixed-tab",
                   "murmur": "murmur3", "murmurhash3": "murmur3"}
        return cls(aliases.get(text, text))

    def __str__(self) -> str:
        return f"poly{self.t}" if self.kind == "poly" else self.kind

    @property
    def code(self) -> int:
        return zlib.crc32(str(self).encode())


MULTIPLY_SHIFT = FamilyId("multiply-shift")
POLY2 = FamilyId("poly", 2)
POLY20 = FamilyId("poly", 20)
MIXED_TAB = FamilyId("mixed-tab")
MURMUR3 = FamilyId("murmur3")


def _tag_int(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    part = int(part)
    if part < 0:
        raise ValueError("seed path components must be non-negative")
    return part


def derive_seed(master: int, *path) -> int:
    """Deterministic 64-bit child seed of ``master`` along ``path``.

    Path components are ints or strings (strings enter via CRC-32). The
    derivation is numpy's ``SeedSequence`` spawn-key hashing, so distinct
    paths give statistically independent children.
    """
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_tag_int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


def seed_stream(master: int, *path) -> np.random.Generator:
    """A PCG64 generator over the child seed sequence of ``master`` at ``path``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_tag_int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def random_poly_coeffs(rng: np.random.Generator, t: int) -> tuple[int, ...]:
    """``t`` coefficients uniform in ``[p]``: 61-bit words, rejecting ``p`` itself."""
    coeffs = []
    bitgen = rng.bit_generator
    while len(coeffs) < t:
        w = int(bitgen.random_raw()) & P
        if w < P:
            coeffs.append(w)
    return tuple(coeffs)


def fill_mixedtab_tables(filler: PolyHash) -> tuple[np.ndarray, np.ndarray]:
    """Fill mixed tabulation tables by evaluating ``filler`` at 0, 1, 2, ...

    T1 entries come first, position-major then character-minor, each built
    from two consecutive 32-bit outputs (high word first); T2 entries follow
    in the same order, one output each.
    """
    out = filler.hash_array(np.arange(3 * 1024, dtype=np.uint32)).astype(np.uint64)
    hi, lo = out[0:2048:2], out[1:2048:2]
    t1 = ((hi << np.uint64(32)) | lo).reshape(4, 256).T
    t2 = out[2048:].astype(np.uint32).reshape(4, 256).T
    return t1, t2


def seed_family(family: FamilyId | str, master: int) -> HashFunction:
    """Draw a hash function of ``family`` deterministically from ``master``."""
    if isinstance(family, str):
        family = FamilyId.parse(family)
    rng = seed_stream(master, family.code)
    bitgen = rng.bit_generator
    if family.kind == "multiply-shift":
        return MultiplyShift(int(bitgen.random_raw()), int(bitgen.random_raw()))
    if family.kind == "poly":
        return PolyHash(random_poly_coeffs(rng, family.t))
    if family.kind == "mixed-tab":
        filler = PolyHash(random_poly_coeffs(rng, TABLE_FILL_INDEPENDENCE))
        return MixedTab(*fill_mixedtab_tables(filler))
    return Murmur3(int(bitgen.random_raw()) & MASK32)


def dump(h: HashFunction) -> str:
    """Line-oriented hex dump of all parameters, for cross-checking builds."""
    return "\n".join([f"family {h.name}", *h.dump_lines()]) + "\n"
