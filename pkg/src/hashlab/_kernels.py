"""Compiled inner loops.

Everything here works on numpy arrays of fixed-width unsigned integers and
is compiled with numba in nopython mode. The public modules wrap these with
argument checking; nothing in this file validates its inputs.
"""

import numpy as np
from numba import njit

MERSENNE_61 = np.uint64((1 << 61) - 1)
MASK32 = np.uint64(0xFFFFFFFF)
MASK29 = np.uint64((1 << 29) - 1)
EMPTY_BIN = np.uint64(0xFFFFFFFFFFFFFFFF)

_U32 = np.uint64(32)
_U29 = np.uint64(29)
_U61 = np.uint64(61)


# ---------------------------------------------------------------------------
# scalar building blocks

@njit(inline="always")
def mulmod_key(acc, x):
    # acc < p, x < 2^32; returns acc * x + 0 reduced to [0, 2^63), not yet < p
    lo = acc & MASK32
    hi = acc >> _U32
    pl = lo * x
    ph = hi * x
    return (ph >> _U29) + ((ph & MASK29) << _U32) + (pl & MERSENNE_61) + (pl >> _U61)


@njit(inline="always")
def fold61(s):
    s = (s & MERSENNE_61) + (s >> _U61)
    if s >= MERSENNE_61:
        s -= MERSENNE_61
    return s


@njit(inline="always")
def poly_raw_scalar(x, coeffs):
    t = coeffs.shape[0]
    acc = coeffs[t - 1]
    for i in range(t - 2, -1, -1):
        acc = fold61(mulmod_key(acc, x) + coeffs[i])
    return acc


@njit(inline="always")
def multiply_shift_scalar(x, a, b):
    return (a * x + b) >> _U32


@njit(inline="always")
def mixedtab_scalar(x, t1, t2):
    # t1, t2 are the (256, 4) tables flattened row-major, t2 widened to 64 bits
    x = np.uint32(x)
    h = (t1[(x & 0xFF) << 2]
         ^ t1[(((x >> 8) & 0xFF) << 2) + 1]
         ^ t1[(((x >> 16) & 0xFF) << 2) + 2]
         ^ t1[((x >> 24) << 2) + 3])
    d = np.uint32(h >> _U32)
    h ^= (t2[(d & 0xFF) << 2]
          ^ t2[(((d >> 8) & 0xFF) << 2) + 1]
          ^ t2[(((d >> 16) & 0xFF) << 2) + 2]
          ^ t2[((d >> 24) << 2) + 3])
    return h & MASK32


@njit(inline="always")
def _rotl32(x, r):
    return ((x << np.uint64(r)) | (x >> np.uint64(32 - r))) & MASK32


@njit(inline="always")
def murmur3_scalar(x, seed):
    k = (x * np.uint64(0xCC9E2D51)) & MASK32
    k = _rotl32(k, 15)
    k = (k * np.uint64(0x1B873593)) & MASK32
    h = seed ^ k
    h = _rotl32(h, 13)
    h = (h * np.uint64(5) + np.uint64(0xE6546B64)) & MASK32
    h ^= np.uint64(4)
    h ^= h >> np.uint64(16)
    h = (h * np.uint64(0x85EBCA6B)) & MASK32
    h ^= h >> np.uint64(13)
    h = (h * np.uint64(0xC2B2AE35)) & MASK32
    h ^= h >> np.uint64(16)
    return h


@njit(inline="always")
def fmix64(h):
    h ^= h >> np.uint64(33)
    h *= np.uint64(0xFF51AFD7ED558CCD)
    h ^= h >> np.uint64(33)
    h *= np.uint64(0xC4CEB9FE1A85EC53)
    h ^= h >> np.uint64(33)
    return h


# ---------------------------------------------------------------------------
# array evaluation

@njit(cache=True, nogil=True)
def poly_raw_array(keys, coeffs):
    out = np.empty(keys.shape[0], dtype=np.uint64)
    for i in range(keys.shape[0]):
        out[i] = poly_raw_scalar(np.uint64(keys[i]), coeffs)
    return out


@njit(cache=True, nogil=True)
def poly_array(keys, coeffs):
    out = np.empty(keys.shape[0], dtype=np.uint32)
    for i in range(keys.shape[0]):
        out[i] = poly_raw_scalar(np.uint64(keys[i]), coeffs) & MASK32
    return out


@njit(cache=True, nogil=True)
def multiply_shift_array(keys, a, b):
    out = np.empty(keys.shape[0], dtype=np.uint32)
    for i in range(keys.shape[0]):
        out[i] = multiply_shift_scalar(np.uint64(keys[i]), a, b)
    return out


@njit(cache=True, nogil=True)
def mixedtab_array(keys, t1, t2):
    out = np.empty(keys.shape[0], dtype=np.uint32)
    for i in range(keys.shape[0]):
        out[i] = mixedtab_scalar(np.uint64(keys[i]), t1, t2)
    return out


@njit(cache=True, nogil=True)
def murmur3_array(keys, seed):
    out = np.empty(keys.shape[0], dtype=np.uint32)
    for i in range(keys.shape[0]):
        out[i] = murmur3_scalar(np.uint64(keys[i]), seed)
    return out


# XOR-folding variants used by the timing benchmark: the hash loop is the
# whole workload, so no output array is written.

@njit(cache=True, nogil=True)
def poly_checksum(keys, coeffs):
    acc = np.uint64(0)
    for i in range(keys.shape[0]):
        acc ^= poly_raw_scalar(np.uint64(keys[i]), coeffs) & MASK32
    return acc


@njit(cache=True, nogil=True)
def multiply_shift_checksum(keys, a, b):
    acc = np.uint64(0)
    for i in range(keys.shape[0]):
        acc ^= multiply_shift_scalar(np.uint64(keys[i]), a, b)
    return acc


@njit(cache=True, nogil=True)
def mixedtab_checksum(keys, t1, t2):
    acc = np.uint64(0)
    for i in range(keys.shape[0]):
        acc ^= mixedtab_scalar(np.uint64(keys[i]), t1, t2)
    return acc


@njit(cache=True, nogil=True)
def murmur3_checksum(keys, seed):
    acc = np.uint64(0)
    for i in range(keys.shape[0]):
        acc ^= murmur3_scalar(np.uint64(keys[i]), seed)
    return acc


# ---------------------------------------------------------------------------
# sketches

@njit(cache=True, nogil=True)
def oph_bins(hashes, k):
    bins = np.full(k, EMPTY_BIN, dtype=np.uint64)
    kk = np.uint64(k)
    for i in range(hashes.shape[0]):
        h = np.uint64(hashes[i])
        b = h % kk
        v = h // kk
        if v < bins[b]:
            bins[b] = v
    return bins


@njit(cache=True, nogil=True)
def densify(bins, direction_bits, offset_c):
    k = bins.shape[0]
    out = bins.copy()
    for i in range(k):
        if bins[i] != EMPTY_BIN:
            continue
        step = 1 if direction_bits[i] else -1
        j = 1
        src = (i + step) % k
        while bins[src] == EMPTY_BIN:
            j += 1
            src = (src + step) % k
        out[i] = bins[src] + np.uint64(j) * offset_c
    return out


@njit(cache=True, nogil=True)
def feature_hash_independent(indices, weights, bin_hashes, sign_hashes, d_prime):
    out = np.zeros(d_prime, dtype=np.float64)
    dp = np.uint64(d_prime)
    for i in range(indices.shape[0]):
        b = np.uint64(bin_hashes[i]) % dp
        if sign_hashes[i] & 1:
            out[b] -= weights[i]
        else:
            out[b] += weights[i]
    return out


@njit(cache=True, nogil=True)
def feature_hash_combined(indices, weights, hashes, log2_d):
    d_prime = 1 << log2_d
    out = np.zeros(d_prime, dtype=np.float64)
    mask = np.uint64(d_prime - 1)
    sh = np.uint64(log2_d)
    for i in range(indices.shape[0]):
        h = np.uint64(hashes[i])
        b = h & mask
        if (h >> sh) & np.uint64(1):
            out[b] -= weights[i]
        else:
            out[b] += weights[i]
    return out


@njit(cache=True, nogil=True)
def fingerprint(values, seed):
    h = seed
    for i in range(values.shape[0]):
        h = fmix64(h ^ values[i])
    return h


@njit(cache=True, nogil=True)
def fingerprint_rows(rows, seed):
    out = np.empty(rows.shape[0], dtype=np.uint64)
    for r in range(rows.shape[0]):
        out[r] = fingerprint(rows[r], seed)
    return out
