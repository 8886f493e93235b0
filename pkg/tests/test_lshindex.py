import math

import numpy as np
import pytest

from hashlab import datagen as dg
from hashlab import hashcore as hc
from hashlab.lshindex import (
    FINGERPRINT_SEED, EmptySet, InvalidThreshold, LshIndex, LshParams, bucket_fingerprint,
    eval_metrics, lsh_build, lsh_query, records_to_csv,
)
from hashlab.sketch import random_directions

from oracles import densify_oracle, fingerprint_oracle, fmix64, jaccard_oracle, oph_oracle

C = 1 << 32


@pytest.fixture(scope="module")
def small_corpus():
    return dg.gen_lsh_corpus(60, 40, 21, n_queries=6)


def oracle_key(keys, family, master, ell, big_k):
    tseed = hc.derive_seed(master, "lsh-table", ell)
    h = hc.seed_family(family, tseed)
    bits = random_directions(hc.seed_stream(tseed, "densify"), big_k).tolist()
    hashes = [h(int(x)) for x in keys]
    return fingerprint_oracle(densify_oracle(oph_oracle(hashes, big_k), bits, C))


def test_fingerprint_matches_oracle(rng):
    for _ in range(50):
        v = rng.integers(0, 1 << 64, size=int(rng.integers(1, 40)), dtype=np.uint64)
        assert bucket_fingerprint(v) == fingerprint_oracle(v.tolist())
    assert bucket_fingerprint([0]) == fmix64(FINGERPRINT_SEED)
    with pytest.raises(ValueError):
        bucket_fingerprint([])


def test_fingerprint_single_change_never_collides(rng):
    base = rng.integers(0, 1 << 64, size=10, dtype=np.uint64)
    f0 = bucket_fingerprint(base)
    for pos in range(10):
        for _ in range(100):
            v = base.copy()
            v[pos] ^= rng.integers(1, 1 << 64, dtype=np.uint64)
            assert bucket_fingerprint(v) != f0


@pytest.mark.parametrize("family", ["multiply-shift", "mixed-tab"])
def test_buckets_match_recomputation(small_corpus, family):
    params = LshParams(6, 3)
    index = LshIndex.build(small_corpus.corpus, params, family, 77)
    for ell, buckets in enumerate(index.bucket_contents()):
        want = {}
        for i, s in enumerate(small_corpus.corpus):
            want.setdefault(oracle_key(s.tolist(), family, 77, ell, 6), []).append(i)
        assert buckets == want


def test_query_is_union_over_tables(small_corpus):
    index = LshIndex.build(small_corpus.corpus, LshParams(4, 5), "poly2", 3)
    for q in small_corpus.queries:
        full = index.query(q)
        assert full == set().union(*(index.query(q, [t]) for t in range(5)))


def test_self_retrieval(small_corpus):
    index = lsh_build(small_corpus.corpus, LshParams(10, 2), "mixed-tab", 5)
    for i, s in enumerate(small_corpus.corpus):
        assert i in lsh_query(index, s)


def test_more_tables_retrieve_more(small_corpus):
    q = small_corpus.queries
    big = LshIndex.build(small_corpus.corpus, LshParams(3, 8), "mixed-tab", 9)
    for L in range(1, 8):
        for x in q:
            assert big.query(x, range(L)) <= big.query(x, range(L + 1))


def test_single_table_is_one_bucket(small_corpus):
    index = LshIndex.build(small_corpus.corpus, LshParams(5, 1), "mixed-tab", 2)
    (buckets,) = index.bucket_contents()
    for q in small_corpus.queries:
        got = index.query(q)
        assert got in [set(v) for v in buckets.values()] or got == set()


def test_disjoint_queries_rarely_hit():
    rng = np.random.default_rng(4)
    corpus = [rng.choice(10_000, size=50, replace=False) + 10_000 * i for i in range(100)]
    corpus = [np.sort(s).astype(np.uint32) for s in corpus]
    index = LshIndex.build(corpus, LshParams(10, 10), "mixed-tab", 1)
    off = 2**31
    queries = [np.sort(rng.choice(10**6, size=50, replace=False) + off + 10**6 * i).astype(np.uint32)
               for i in range(1000)]
    nonempty = sum(bool(index.query(q)) for q in queries)
    assert nonempty <= 10


def test_build_deterministic(small_corpus):
    a = LshIndex.build(small_corpus.corpus, LshParams(4, 4), "murmur3", 12)
    b = LshIndex.build(small_corpus.corpus, LshParams(4, 4), "murmur3", 12)
    assert a.bucket_contents() == b.bucket_contents()


def test_empty_sets_rejected(small_corpus):
    corpus = list(small_corpus.corpus)
    corpus[3] = np.array([], dtype=np.uint32)
    with pytest.raises(EmptySet) as err:
        LshIndex.build(corpus, LshParams(4, 2), "poly2", 0)
    assert err.value.set_id == 3
    index = LshIndex.build(small_corpus.corpus, LshParams(4, 2), "poly2", 0)
    with pytest.raises(EmptySet):
        index.query([])
    with pytest.raises(ValueError):
        LshIndex.build([], LshParams(4, 2), "poly2", 0)
    with pytest.raises(ValueError):
        LshParams(0, 1)


class _Everything:
    def __init__(self, size):
        self.size = size

    def query(self, q):
        return set(range(self.size))


def test_eval_metrics_retrieve_everything(small_corpus):
    c = small_corpus
    metrics, records = eval_metrics(_Everything(len(c.corpus)), c.queries, c.corpus, 0.4)
    assert metrics.retrieved_fraction == 1.0
    assert metrics.recall_at_t0 == 1.0
    for r in records:
        assert r.n_retrieved == len(c.corpus)
        assert r.recall == 1.0 and r.ratio == len(c.corpus)


def test_eval_metrics_brute_force():
    rng = np.random.default_rng(6)
    base = rng.choice(400, size=60, replace=False)
    corpus = []
    for i in range(20):
        keep = base[rng.random(60) < 0.4 + 0.03 * i]
        corpus.append(np.unique(np.concatenate([keep, 1000 * (i + 1) + np.arange(5)])).astype(np.uint32))
    queries = corpus[::4]
    index = LshIndex.build(corpus, LshParams(2, 3), "mixed-tab", 31)
    t0 = 0.3
    metrics, records = eval_metrics(index, queries, corpus, t0)
    recalls, sizes, ratios = [], [], []
    for qi, q in enumerate(queries):
        rel = {i for i, s in enumerate(corpus) if jaccard_oracle(q, s) >= t0}
        got = index.query(q)
        assert records[qi].n_relevant == len(rel) and records[qi].n_retrieved == len(got)
        r = len(got & rel) / len(rel)
        recalls.append(r)
        sizes.append(len(got))
        ratios.append(len(got) / r if r else math.inf)
    assert math.isclose(metrics.recall_at_t0, np.mean(recalls))
    assert math.isclose(metrics.retrieved_fraction, np.mean(sizes) / 20)
    assert metrics.median_ratio == np.median(ratios)
    assert metrics.n_no_relevant == 0


def test_eval_threshold_one_self_queries(small_corpus):
    c = small_corpus
    index = LshIndex.build(c.corpus, LshParams(8, 2), "poly20", 8)
    metrics, _ = eval_metrics(index, c.corpus, c.corpus, 1.0)
    assert metrics.recall_at_t0 == 1.0


def test_eval_invalid_threshold(small_corpus):
    index = _Everything(3)
    for t0 in (0.0, -0.1, 1.5):
        with pytest.raises(InvalidThreshold):
            eval_metrics(index, small_corpus.queries, small_corpus.corpus, t0)


def test_records_csv(small_corpus):
    c = small_corpus
    _, records = eval_metrics(_Everything(len(c.corpus)), c.queries[:2], c.corpus, 0.4)
    lines = records_to_csv(records).splitlines()
    assert lines[0] == "query_id,n_retrieved,n_relevant,recall,ratio"
    assert lines[1].split(",")[:2] == ["0", str(len(c.corpus))]
    assert len(lines) == 3
