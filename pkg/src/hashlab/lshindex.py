"""(K, L) locality-sensitive hashing over densified OPH sketches."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .datagen import exact_jaccard
from .hashcore import FamilyId, derive_seed, seed_family, seed_stream
from .sketch import DEFAULT_OFFSET, OphParams, oph_build, oph_densify, random_directions

#: Initial state of the bucket fingerprint fold.
FINGERPRINT_SEED = 0x9E3779B97F4A7C15


class EmptySet(ValueError):
    def __init__(self, message: str, set_id=None):
        super().__init__(message)
        self.set_id = set_id


class InvalidThreshold(ValueError):
    pass


def bucket_fingerprint(values) -> int:
    """Fold sketch values into one 64-bit key.

    ``h = fmix64(h ^ v)`` for each value, starting from
    :data:`FINGERPRINT_SEED`. Every step is a bijection of ``h``, so two
    sketches that differ in exactly one position never collide.
    """
    values = np.ascontiguousarray(values, dtype=np.uint64)
    if values.ndim != 1 or values.shape[0] == 0:
        raise ValueError("need a non-empty 1-d array of sketch values")
    return int(_kernels.fingerprint(values, np.uint64(FINGERPRINT_SEED)))


@dataclass(frozen=True)
class LshParams:
    big_k: int
    big_l: int
    offset_c: int = DEFAULT_OFFSET

    def __post_init__(self):
        if self.big_k < 1 or self.big_l < 1:
            raise ValueError("K and L must both be >= 1")

    @property
    def oph(self) -> OphParams:
        return OphParams(self.big_k, self.offset_c)


@dataclass
class _Table:
    h: object
    directions: np.ndarray
    buckets: dict = field(default_factory=lambda: defaultdict(list))

    def key(self, keys, oph: OphParams) -> int:
        return bucket_fingerprint(oph_densify(oph_build(keys, self.h, oph), self.directions, oph))


class LshIndex:
    """``L`` tables, each mapping a K-bin sketch fingerprint to corpus ids.

    Table ``l`` draws its hash function and densification bits from
    ``derive_seed(master, "lsh-table", l)``.
    """

    def __init__(self, params: LshParams, family: FamilyId | str, master: int):
        self.params = params
        self.family = FamilyId.parse(family) if isinstance(family, str) else family
        self.master = master
        self.size = 0
        self.tables = []
        for ell in range(params.big_l):
            tseed = derive_seed(master, "lsh-table", ell)
            h = seed_family(self.family, tseed)
            dirs = random_directions(seed_stream(tseed, "densify"), params.big_k)
            self.tables.append(_Table(h, dirs))

    @classmethod
    def build(cls, corpus, params: LshParams, family: FamilyId | str, master: int) -> LshIndex:
        index = cls(params, family, master)
        if len(corpus) == 0:
            raise ValueError("corpus must not be empty")
        for i, s in enumerate(corpus):
            if len(s) == 0:
                raise EmptySet(f"corpus set {i} is empty", i)
        oph = params.oph
        for t in index.tables:
            for i, s in enumerate(corpus):
                t.buckets[t.key(s, oph)].append(i)
        index.size = len(corpus)
        return index

    def query(self, q, tables=None) -> set[int]:
        """Ids sharing a bucket with ``q`` in any table (or in ``tables`` only)."""
        if len(q) == 0:
            raise EmptySet("query set is empty")
        oph = self.params.oph
        chosen = self.tables if tables is None else [self.tables[i] for i in tables]
        found = set()
        for t in chosen:
            found.update(t.buckets.get(t.key(q, oph), ()))
        return found

    def bucket_contents(self) -> list[dict[int, list[int]]]:
        return [dict(t.buckets) for t in self.tables]


lsh_build = LshIndex.build


def lsh_query(index: LshIndex, q) -> set[int]:
    return index.query(q)


@dataclass(frozen=True)
class QueryRecord:
    query_id: int
    n_retrieved: int
    n_relevant: int
    n_hit: int
    recall: float
    ratio: float


@dataclass(frozen=True)
class EvalMetrics:
    """Aggregates over queries.

    ``recall_at_t0`` and ``retrieved_over_recall`` average only the queries
    with at least one relevant point; ``n_no_relevant`` counts the rest.
    ``median_ratio`` is the median per-query ``n_retrieved / recall``.
    """

    t0: float
    retrieved_fraction: float
    recall_at_t0: float
    retrieved_over_recall: float
    median_ratio: float
    n_queries: int
    n_no_relevant: int


def _ratio(n_retrieved: int, recall: float) -> float:
    return n_retrieved / recall if recall > 0 else math.inf


def eval_metrics(index: LshIndex, queries, corpus, t0: float):
    """Score ``index`` on ``queries`` against brute-force Jaccard ground truth.

    Returns ``(EvalMetrics, [QueryRecord, ...])``.
    """
    if not 0 < t0 <= 1:
        raise InvalidThreshold(f"t0 must lie in (0, 1], got {t0}")
    records = []
    for qid, q in enumerate(queries):
        retrieved = index.query(q)
        relevant = {i for i, s in enumerate(corpus) if exact_jaccard(q, s) >= t0}
        hit = len(retrieved & relevant)
        recall = hit / len(relevant) if relevant else math.nan
        records.append(QueryRecord(qid, len(retrieved), len(relevant), hit, recall,
                                   _ratio(len(retrieved), recall) if relevant else math.nan))
    scored = [r for r in records if r.n_relevant]
    frac = float(np.mean([r.n_retrieved for r in records])) / len(corpus)
    if scored:
        recall = float(np.mean([r.recall for r in scored]))
        mean_ret = float(np.mean([r.n_retrieved for r in scored]))
        median = float(np.median([r.ratio for r in scored]))
    else:
        recall, mean_ret, median = math.nan, math.nan, math.nan
    metrics = EvalMetrics(t0, frac, recall, _ratio(mean_ret, recall) if scored else math.nan,
                          median, len(records), len(records) - len(scored))
    return metrics, records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["query_id", "n_retrieved", "n_relevant", "recall", "ratio"])
    for r in records:
        w.writerow([r.query_id, r.n_retrieved, r.n_relevant, repr(r.recall), repr(r.ratio)])
    return buf.getvalue()
