"""Spread and clustering of hash values of consecutive keys in ``[p]``.

A random linear map ``x -> a*x + b mod p`` sends ``0, 1, ..., n-1`` to an
arithmetic progression on the circle of circumference ``p``. Such a
progression is often far more evenly spread, or far more clumped, than
``n`` independent uniform points. These statistics measure both effects.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .hashcore import P, FamilyId, derive_seed, seed_family


class TooFewValues(ValueError):
    pass


class UnsupportedFamily(ValueError):
    pass


def _sorted_values(values) -> np.ndarray:
    v = np.sort(np.asarray(values, dtype=np.uint64))
    if v.shape[0] < 2:
        raise TooFewValues("need at least two values")
    return v


def _gaps(v: np.ndarray, p: int, circular: bool) -> np.ndarray:
    gaps = np.diff(v)
    if circular:
        wrap = np.uint64(p) - (v[-1] - v[0])
        gaps = np.append(gaps, wrap)
    return gaps


def min_pairwise_gap(values, circular: bool = True, p: int = P) -> int:
    """Smallest distance between two of ``values``.

    With ``circular`` the values live on ``Z_p`` and the wrap-around gap
    ``p - (max - min)`` counts too.
    """
    v = _sorted_values(values)
    return int(_gaps(v, p, circular).min())


def _path_matching(close: np.ndarray) -> int:
    # maximum matching of a path whose i-th edge exists iff close[i]
    count = 0
    i = 0
    m = close.shape[0]
    while i < m:
        if close[i]:
            count += 1
            i += 2
        else:
            i += 1
    return count


def count_close_disjoint_pairs(values, threshold: int, circular: bool = True,
                               p: int = P) -> int:
    """Largest number of disjoint pairs whose values differ by at most ``threshold``.

    Only neighbours in sorted order need be considered, and on a path of
    neighbours greedy left-to-right pairing is a maximum matching. In the
    circular case the wrap-around pair is tried both used and unused.
    """
    v = _sorted_values(values)
    gaps = _gaps(v, p, circular)
    close = gaps <= np.uint64(threshold)
    if v.shape[0] == 2:
        # both gaps join the same pair
        return int(close.any())
    best = _path_matching(close[: v.shape[0] - 1])
    if circular and close[-1]:
        # pair (last, first) is used: drop both endpoints and their edges
        best = max(best, 1 + _path_matching(close[1: v.shape[0] - 2]))
    return best


@dataclass(frozen=True)
class GapReport:
    n: int
    min_gap: int
    close_pair_count: int
    threshold: int
    circular: bool


def gap_report(values, eps: float, circular: bool = True) -> GapReport:
    n = len(values)
    threshold = int(math.floor(eps * P / n))
    return GapReport(n, min_pairwise_gap(values, circular),
                     count_close_disjoint_pairs(values, threshold, circular),
                     threshold, circular)


@dataclass(frozen=True)
class SpreadResult:
    family: str
    n: int
    eps: float
    trials: int
    circular: bool
    spread_prob: float
    cluster_prob: float

    def to_dict(self) -> dict:
        return asdict(self)


def spread_trial(family: FamilyId | str, n: int, trials: int, master: int,
                 eps: float = 0.1, circular: bool = True) -> SpreadResult:
    """Estimate how often a fresh PolyHash spreads or clusters ``0 .. n-1``.

    A trial is *spread* when every gap is at least ``p / (4n)`` and
    *clustered* when at least ``n / 8`` disjoint pairs lie within
    ``floor(eps * p / n)`` of each other. Trial ``i`` uses the function
    seeded by ``derive_seed(master, "gap-stats", i)``.
    """
    if isinstance(family, str):
        family = FamilyId.parse(family)
    if family.kind != "poly":
        raise UnsupportedFamily(f"{family} does not hash into [p]; gap statistics need PolyHash")
    if n < 2 or trials < 1:
        raise ValueError("need n >= 2 and trials >= 1")
    keys = np.arange(n, dtype=np.uint32)
    spread_at = P / (4 * n)
    threshold = int(math.floor(eps * P / n))
    need_pairs = n / 8
    spread = clustered = 0
    for i in range(trials):
        h = seed_family(family, derive_seed(master, "gap-stats", i))
        vals = h.raw_array(keys)
        if min_pairwise_gap(vals, circular) >= spread_at:
            spread += 1
        if count_close_disjoint_pairs(vals, threshold, circular) >= need_pairs:
            clustered += 1
    return SpreadResult(str(family), n, eps, trials, circular,
                        spread / trials, clustered / trials)
