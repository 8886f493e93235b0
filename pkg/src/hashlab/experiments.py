"""Experiment drivers behind the ``hashlab`` command line.

Every driver returns a report object whose ``to_dict()`` is fully
determined by its arguments (timings aside), and :func:`emit_report`
writes it as JSON and/or CSV. Repetition ``r`` of experiment ``tag`` draws
all its randomness from ``derive_seed(master, tag, r)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datagen, gapstats, lshindex
from .hashcore import FamilyId, derive_seed, seed_family, seed_stream
from .sketch import (COMBINED, INDEPENDENT, FhParams, OphParams, SparseVector, feature_hash,
                     estimate_similarity, norm_sq, oph_build, oph_densify, random_directions)

DEFAULT_FAMILIES = ("multiply-shift", "poly2", "poly20", "mixed-tab", "murmur3")
BENCH_FAMILIES = ("multiply-shift", "poly2", "poly3", "poly20", "mixed-tab", "murmur3")
HIST_BINS = 50
MIN_REPS = 100


def worker_count() -> int:
    env = os.environ.get("HASHLAB_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            pass
    return cap


def _map(fn, items):
    items = list(items)
    threads = worker_count()
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _families(families) -> list[FamilyId]:
    return [f if isinstance(f, FamilyId) else FamilyId.parse(f) for f in families]


def _clean(x):
    # JSON has no inf/nan
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def histogram(samples: np.ndarray, value_range=None, bins: int = HIST_BINS):
    counts, edges = np.histogram(samples, bins=bins, range=value_range)
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]


@dataclass
class FamilyStats:
    samples: np.ndarray
    target: float
    value_range: tuple | None = None
    extra: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def mse(self) -> float:
        return float(np.mean((self.samples - self.target) ** 2))

    @property
    def std_error(self) -> float:
        return float(self.samples.std(ddof=1) / math.sqrt(self.samples.shape[0]))

    def to_dict(self) -> dict:
        s = self.samples
        return {
            "count": int(s.shape[0]),
            "target": float(self.target),
            "mean": self.mean,
            "mse": self.mse,
            "std_error": self.std_error,
            "min": float(s.min()),
            "max": float(s.max()),
            **self.extra,
            "histogram": [list(b) for b in histogram(s, self.value_range)],
        }


@dataclass
class ExperimentReport:
    name: str
    config: dict
    results: dict = field(default_factory=dict)
    #: per-family extra rows (e.g. LSH per-query records)
    records: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        res = {}
        for fam, r in self.results.items():
            res[fam] = r.to_dict() if hasattr(r, "to_dict") else r
        return _clean({"experiment": self.name, "config": self.config, "results": res})


@dataclass
class TimingReport:
    config: dict
    results: dict = field(default_factory=dict)
    name: str = "bench-time"
    records: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        return _clean({"experiment": self.name, "config": self.config, "results": self.results})


# ---------------------------------------------------------------------------
# timing

def cmd_bench_time(n_keys: int = 10 ** 7, families=BENCH_FAMILIES, master: int = 0,
                   passes: int = 5) -> TimingReport:
    """Hash one random key array with every family; median of ``passes`` runs.

    Each family gets an untimed warm-up pass first. The XOR of all outputs is
    recorded so the work cannot be optimised away and runs can be compared.
    """
    fams = _families(families)
    start = time.perf_counter()
    keys = seed_stream(master, "bench-keys").integers(0, 1 << 32, size=n_keys, dtype=np.uint32)
    report = TimingReport({"n_keys": n_keys, "families": [str(f) for f in fams],
                           "seed": master, "passes": passes})
    for fam in fams:
        h = seed_family(fam, derive_seed(master, "bench-time"))
        checksum = h.checksum(keys)
        times = []
        for _ in range(passes):
            t = time.perf_counter_ns()
            c = h.checksum(keys)
            times.append(time.perf_counter_ns() - t)
            if c != checksum:
                raise RuntimeError(f"{fam} checksum changed between passes")
        total = int(statistics.median(times))
        report.results[str(fam)] = {"total_ns": total, "ns_per_key": total / n_keys,
                                    "checksum": f"0x{checksum:08x}"}
    report.wall_clock_s = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# OPH

def _check_reps(reps: int):
    if reps < MIN_REPS:
        raise ValueError(f"reps must be at least {MIN_REPS}")


def oph_estimates(a, b, family: FamilyId, k: int, reps: int, master: int,
                  tag: str = "oph-synth") -> np.ndarray:
    params = OphParams(k)

    def one(r):
        seed = derive_seed(master, tag, r)
        h = seed_family(family, seed)
        dirs = random_directions(seed_stream(seed, "densify"), k)
        sa = oph_densify(oph_build(a, h, params), dirs, params)
        sb = oph_densify(oph_build(b, h, params), dirs, params)
        return estimate_similarity(sa, sb)

    return np.array(_map(one, range(reps)), dtype=np.float64)


def cmd_oph_synth(n: int = 2000, k: int = 200, reps: int = 2000, families=DEFAULT_FAMILIES,
                  master: int = 0, dataset: str = "v1", split: str = datagen.ALTERNATE
                  ) -> ExperimentReport:
    """Jaccard estimates of one synthetic pair, ``reps`` fresh seeds per family."""
    _check_reps(reps)
    fams = _families(families)
    start = time.perf_counter()
    data_seed = derive_seed(master, "oph-synth-data")
    if dataset == "v1":
        pair = datagen.gen_synth_pair(n, data_seed, split=split)
    elif dataset == "v2":
        pair = datagen.gen_synth_pair_v2(n, data_seed, split=split)
    else:
        raise ValueError(f"unknown dataset {dataset!r}")
    report = ExperimentReport("oph-synth", {
        "n": n, "k": k, "reps": reps, "families": [str(f) for f in fams], "seed": master,
        "dataset": dataset, "split": split, "exact_jaccard": pair.exact_j,
        "size_a": int(pair.a.shape[0]), "size_b": int(pair.b.shape[0])})
    for fam in fams:
        est = oph_estimates(pair.a, pair.b, fam, k, reps, master)
        report.results[str(fam)] = FamilyStats(est, pair.exact_j, (0.0, 1.0))
    report.wall_clock_s = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# feature hashing

def fh_norms(vectors, family: FamilyId, d_prime: int, reps: int, master: int, tag: str,
             sign_mode: str = INDEPENDENT) -> np.ndarray:
    """``||v'||^2`` for every repetition (outer) and vector (inner)."""
    params = FhParams(d_prime, sign_mode)

    def one(r):
        seed = derive_seed(master, tag, r)
        h = seed_family(family, seed)
        sign_h = None if sign_mode == COMBINED else seed_family(family, derive_seed(seed, "sign"))
        return [norm_sq(feature_hash(v, h, sign_h, params)) for v in vectors]

    return np.array(_map(one, range(reps)), dtype=np.float64).ravel()


def cmd_fh_synth(n: int = 2000, d_prime: int = 200, reps: int = 2000, families=DEFAULT_FAMILIES,
                 master: int = 0, variant: str = datagen.INDICATOR_2N,
                 sign_mode: str = INDEPENDENT) -> ExperimentReport:
    """Squared norms after feature hashing one synthetic unit vector."""
    _check_reps(reps)
    FhParams(d_prime, sign_mode)
    fams = _families(families)
    start = time.perf_counter()
    v = datagen.gen_fh_vector(n, variant, derive_seed(master, "fh-synth-data"))
    report = ExperimentReport("fh-synth", {
        "n": n, "d_prime": d_prime, "reps": reps, "families": [str(f) for f in fams],
        "seed": master, "variant": variant, "sign_mode": sign_mode, "support": len(v)})
    for fam in fams:
        report.results[str(fam)] = FamilyStats(fh_norms([v], fam, d_prime, reps, master,
                                                        "fh-synth", sign_mode), 1.0)
    report.wall_clock_s = time.perf_counter() - start
    return report


class EmptyDataset(ValueError):
    pass


def load_libsvm_vectors(path) -> list[SparseVector]:
    """Parse a LIBSVM file and normalise every row; zero rows are dropped."""
    with open(path) as fh:
        rows = datagen.parse_libsvm(fh)
    vectors = [r.features.normalized() for r in rows if r.features.norm() > 0]
    if not vectors:
        raise EmptyDataset(f"{path} contains no non-zero vectors")
    return vectors


def cmd_fh_real(libsvm_path, d_prime: int = 128, reps: int = 100, families=DEFAULT_FAMILIES,
                master: int = 0, sign_mode: str = INDEPENDENT) -> ExperimentReport:
    """Pooled ``||v'||^2`` over every row of a LIBSVM file and ``reps`` seeds."""
    if reps < 1:
        raise ValueError("reps must be positive")
    FhParams(d_prime, sign_mode)
    fams = _families(families)
    start = time.perf_counter()
    vectors = load_libsvm_vectors(libsvm_path)
    report = ExperimentReport("fh-real", {
        "path": str(libsvm_path), "n_vectors": len(vectors), "d_prime": d_prime, "reps": reps,
        "families": [str(f) for f in fams], "seed": master, "sign_mode": sign_mode})
    for fam in fams:
        report.results[str(fam)] = FamilyStats(fh_norms(vectors, fam, d_prime, reps, master,
                                                        "fh-real", sign_mode), 1.0)
    report.wall_clock_s = time.perf_counter() - start
    return report


def fh_min_dimension(eps: float, delta: float) -> int:
    """Smallest ``d'`` with ``d' >= 16 eps^-2 lg(1/delta)``."""
    return math.ceil(16 * math.log2(1 / delta) / eps ** 2)


def fh_max_linf(eps: float, delta: float, d_prime: int) -> float:
    """Largest ``||v||_inf`` for which the truly random tail bound applies."""
    return (math.sqrt(eps * math.log(1 + 4 / eps))
            / (6 * math.sqrt(math.log(1 / delta) * math.log(d_prime / delta))))


def cmd_fh_tail(eps: float = 0.5, delta: float = 0.05, d_prime: int | None = None,
                support: int = 10 ** 4, reps: int = 2000, family="poly20",
                master: int = 0) -> ExperimentReport:
    """Empirical ``Pr[| ||v'||^2 - 1 | >= eps]`` for a flat unit vector.

    ``v`` has weight ``support**-0.5`` on keys ``0 .. support-1``. The report
    also echoes the dimension and ``||v||_inf`` preconditions of the bound
    ``Pr[1 - eps < ||v'||^2 < 1 + eps] >= 1 - 4 delta``.
    """
    fam = _families([family])[0]
    d_prime = d_prime or fh_min_dimension(eps, delta)
    start = time.perf_counter()
    v = SparseVector(np.arange(support), np.full(support, 1 / math.sqrt(support)))
    norms = fh_norms([v], fam, d_prime, reps, master, "fh-tail")
    fail = float(np.mean(np.abs(norms - 1.0) >= eps))
    report = ExperimentReport("fh-tail", {
        "eps": eps, "delta": delta, "d_prime": d_prime, "support": support, "reps": reps,
        "family": str(fam), "seed": master,
        "min_d_prime": fh_min_dimension(eps, delta),
        "linf": 1 / math.sqrt(support), "max_linf": fh_max_linf(eps, delta, d_prime)})
    report.results[str(fam)] = FamilyStats(norms, 1.0,
                                           extra={"failure_rate": fail, "bound": 4 * delta})
    report.wall_clock_s = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# LSH

def cmd_lsh_eval(big_k: int = 10, big_l: int = 10, n_points: int = 1000, n: int = 100,
                 n_queries: int = 30, noise: float = 0.05, t0: float = 0.4,
                 families=DEFAULT_FAMILIES, master: int = 0, libsvm_path=None,
                 queries_equal_corpus: bool = False) -> ExperimentReport:
    """Build one (K, L) index per family and score it.

    Without ``libsvm_path`` the planted synthetic corpus is used. With it,
    each non-empty row's support becomes a set; the first ``n_points`` rows
    form the corpus and the next ``n_queries`` rows the queries.
    """
    fams = _families(families)
    start = time.perf_counter()
    params = lshindex.LshParams(big_k, big_l)
    if not 0 < t0 <= 1:
        raise lshindex.InvalidThreshold(f"t0 must lie in (0, 1], got {t0}")
    partners = None
    if libsvm_path is None:
        data = datagen.gen_lsh_corpus(n_points, n, derive_seed(master, "lsh-data"),
                                      n_queries=n_queries, noise=noise)
        corpus, queries, partners = data.corpus, data.queries, data.partners
    else:
        with open(libsvm_path) as fh:
            rows = [r.features.indices for r in datagen.parse_libsvm(fh) if len(r.features)]
        corpus, queries = rows[:n_points], rows[n_points:n_points + n_queries]
        if not corpus or not queries:
            raise EmptyDataset(f"{libsvm_path} has too few non-empty rows")
    if queries_equal_corpus:
        queries, partners = list(corpus), list(range(len(corpus)))
    report = ExperimentReport("lsh-eval", {
        "K": big_k, "L": big_l, "t0": t0, "families": [str(f) for f in fams], "seed": master,
        "source": str(libsvm_path) if libsvm_path else "synthetic",
        "n_points": len(corpus), "n": n, "n_queries": len(queries), "noise": noise,
        "queries_equal_corpus": queries_equal_corpus})
    for fam in fams:
        index = lshindex.lsh_build(corpus, params, fam, derive_seed(master, "lsh-eval"))
        metrics, records = lshindex.eval_metrics(index, queries, corpus, t0)
        result = {
            "retrieved_fraction": metrics.retrieved_fraction,
            "recall": metrics.recall_at_t0,
            "retrieved_over_recall": metrics.retrieved_over_recall,
            "median_ratio": metrics.median_ratio,
            "n_queries": metrics.n_queries,
            "n_no_relevant": metrics.n_no_relevant,
        }
        if partners is not None:
            hits = [partners[q] in index.query(queries[q]) for q in range(len(queries))]
            result["partner_recall"] = float(np.mean(hits))
        report.results[str(fam)] = result
        report.records[str(fam)] = records
    report.wall_clock_s = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# gap statistics

GAP_REPORT_SCHEMA = {
    "type": "object",
    "required": ["experiment", "config", "results"],
    "properties": {
        "experiment": {"const": "gap-stats"},
        "config": {"type": "object", "required": ["n", "eps", "trials", "seed", "circular"]},
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["family", "n", "eps", "trials", "circular",
                             "spread_prob", "cluster_prob"],
                "properties": {
                    "family": {"type": "string"},
                    "n": {"type": "integer", "minimum": 4},
                    "eps": {"type": "number", "exclusiveMinimum": 0},
                    "trials": {"type": "integer", "minimum": 1},
                    "circular": {"type": "boolean"},
                    "spread_prob": {"type": "number", "minimum": 0, "maximum": 1},
                    "cluster_prob": {"type": "number", "minimum": 0, "maximum": 1},
                },
            },
        },
    },
}


@dataclass
class GapStatsReport:
    config: dict
    results: list = field(default_factory=list)
    name: str = "gap-stats"
    records: dict = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def to_dict(self) -> dict:
        return _clean({"experiment": self.name, "config": self.config,
                       "results": [r.to_dict() for r in self.results]})


def cmd_gap_stats(n: int = 100, eps: float = 0.1, trials: int = 1000, master: int = 0,
                  families=("poly2", "poly20"), circular: bool = True) -> GapStatsReport:
    if n < 4:
        raise ValueError("n must be at least 4")
    fams = _families(families)
    start = time.perf_counter()
    report = GapStatsReport({"n": n, "eps": eps, "trials": trials, "seed": master,
                             "circular": circular, "families": [str(f) for f in fams]})
    report.results = _map(lambda f: gapstats.spread_trial(f, n, trials, master, eps, circular),
                          fams)
    report.wall_clock_s = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# output

def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def histogram_csv(stats: FamilyStats) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bin_left", "bin_right", "count"])
    for left, right, count in histogram(stats.samples, stats.value_range):
        w.writerow([repr(left), repr(right), count])
    return buf.getvalue()


def emit_report(report, fmt: str, out_dir) -> list[Path]:
    """Write ``report`` under ``out_dir``; returns the paths written.

    JSON goes to ``<name>.json``. CSV output is one histogram per family
    (``<name>_<family>_hist.csv``) for sample-based reports, the per-query
    table for LSH (``lsh-eval_<family>_queries.csv``), and a flat
    ``<name>.csv`` otherwise. Wall-clock time goes to a separate
    ``<name>.wallclock.json`` so the other files stay reproducible.
    """
    if fmt not in ("json", "csv", "both"):
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        p = out / name
        p.write_text(text)
        written.append(p)

    if fmt in ("json", "both"):
        put(f"{report.name}.json", report_json(report))
    if fmt in ("csv", "both"):
        if isinstance(report, ExperimentReport) and report.name == "lsh-eval":
            for fam, recs in report.records.items():
                put(f"{report.name}_{fam}_queries.csv", lshindex.records_to_csv(recs))
        elif isinstance(report, ExperimentReport):
            for fam, stats in report.results.items():
                put(f"{report.name}_{fam}_hist.csv", histogram_csv(stats))
        else:
            put(f"{report.name}.csv", _flat_csv(report))
    put(f"{report.name}.wallclock.json",
        json.dumps({"experiment": report.name, "wall_clock_s": report.wall_clock_s}) + "\n")
    return written


def _flat_csv(report) -> str:
    rows = report.to_dict()["results"]
    if isinstance(rows, dict):
        rows = [{"family": k, **v} for k, v in rows.items()]
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()
