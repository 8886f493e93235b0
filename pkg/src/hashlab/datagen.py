"""Synthetic inputs, exact Jaccard similarity, and LIBSVM ingestion.

Sets are sorted ``uint32`` numpy arrays without duplicates. Every generator
takes an integer seed and is a pure function of its arguments.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, TextIO, Union

import numpy as np

from .sketch import SparseVector

UNIVERSE = 1 << 32

ALTERNATE = "alternate"
RANDOM = "random"

INDICATOR_2N = "indicator2n"
DENSE_3N = "dense3n"


class InvalidN(ValueError):
    pass


class EmptyDraw(ValueError):
    pass


class BothEmpty(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, eq=False)
class SynthPair:
    a: np.ndarray
    b: np.ndarray
    exact_j: float


@dataclass(frozen=True)
class LabeledVector:
    label: Union[int, float]
    features: SparseVector


def _as_set(x) -> np.ndarray:
    return np.unique(np.asarray(x, dtype=np.int64)).astype(np.uint32)


def exact_jaccard(a, b) -> float:
    a, b = _as_set(a), _as_set(b)
    inter = np.intersect1d(a, b, assume_unique=True).shape[0]
    union = a.shape[0] + b.shape[0] - inter
    if union == 0:
        raise BothEmpty("Jaccard similarity of two empty sets is undefined")
    return inter / union


def _distinct_uniform(rng: np.random.Generator, count: int, low: int, high: int) -> np.ndarray:
    """``count`` distinct integers uniform on ``[low, high)``, in draw order."""
    if high - low < count:
        raise InvalidN(f"cannot draw {count} distinct values from [{low}, {high})")
    out = np.empty(0, dtype=np.int64)
    while out.shape[0] < count:
        more = rng.integers(low, high, size=count - out.shape[0], dtype=np.int64)
        cat = np.concatenate([out, more])
        _, first = np.unique(cat, return_index=True)
        out = cat[np.sort(first)]
    return out


def _split(rng: np.random.Generator, values: np.ndarray, split: str):
    if split == ALTERNATE:
        return values[0::2], values[1::2]
    if split == RANDOM:
        side = rng.integers(0, 2, size=values.shape[0]).astype(bool)
        return values[~side], values[side]
    raise ValueError(f"unknown split {split!r}")


def _pair(inter, only_a, only_b) -> SynthPair:
    a = np.union1d(inter, only_a).astype(np.uint32)
    b = np.union1d(inter, only_b).astype(np.uint32)
    return SynthPair(a, b, exact_jaccard(a, b))


def gen_synth_pair(n: int, seed: int, *, split: str = ALTERNATE,
                   upper: int = UNIVERSE) -> SynthPair:
    """Dense shared block plus a sparse symmetric difference.

    Each of ``0 .. 2n-1`` enters the intersection with probability 1/2. The
    symmetric difference is ``n`` distinct integers drawn uniformly from
    ``[2n + 1, upper)``, half going to each side.
    """
    if n < 2 or n % 2:
        raise InvalidN("n must be even and at least 2")
    rng = np.random.default_rng(seed)
    inter = np.flatnonzero(rng.random(2 * n) < 0.5)
    sym = _distinct_uniform(rng, n, 2 * n + 1, upper)
    only_a, only_b = _split(rng, sym, split)
    return _pair(inter, only_a, only_b)


def gen_synth_pair_v2(n: int, seed: int, *, split: str = ALTERNATE) -> SynthPair:
    """Everything inside ``[4n]``: the outer quarters feed the symmetric
    difference and the middle half the intersection, each key kept with
    probability 1/2."""
    if n < 1:
        raise InvalidN("n must be at least 1")
    rng = np.random.default_rng(seed)
    outer = np.concatenate([np.arange(0, n), np.arange(3 * n, 4 * n)])
    sym = outer[rng.random(2 * n) < 0.5]
    middle = np.arange(n, 3 * n)
    inter = middle[rng.random(2 * n) < 0.5]
    only_a, only_b = _split(rng, sym, split)
    return _pair(inter, only_a, only_b)


def gen_fh_vector(n: int, variant: str, seed: int) -> SparseVector:
    """Unit-norm indicator vector of a random set.

    ``indicator2n`` uses set ``A`` of :func:`gen_synth_pair`; ``dense3n``
    keeps each of ``0 .. 3n-1`` with probability 1/2.
    """
    if variant == INDICATOR_2N:
        support = gen_synth_pair(n, seed).a
    elif variant == DENSE_3N:
        if n < 1:
            raise InvalidN("n must be at least 1")
        rng = np.random.default_rng(seed)
        support = np.flatnonzero(rng.random(3 * n) < 0.5)
    else:
        raise ValueError(f"unknown FH vector variant {variant!r}")
    if support.shape[0] == 0:
        raise EmptyDraw("the random support came out empty")
    w = np.full(support.shape[0], 1.0 / math.sqrt(support.shape[0]))
    return SparseVector(support, w)


# ---------------------------------------------------------------------------
# LSH corpus

@dataclass(frozen=True, eq=False)
class LshCorpus:
    corpus: list
    queries: list
    #: corpus id of the planted partner of each query
    partners: list


def gen_lsh_corpus(n_points: int, n: int, seed: int, *, n_queries: int = 30,
                   noise: float = 0.05) -> LshCorpus:
    """Corpus of sets with planted near-duplicates for a few queries.

    Corpus set ``i`` owns the dense block ``[2n*i, 2n*(i+1))`` and keeps
    each key of it with probability 1/2, then adds ``round(noise * n)``
    private keys drawn from the upper half of the 32-bit universe. Query
    ``q`` reuses the dense part of its partner (evenly spaced corpus ids)
    with its own private keys, so the partner similarity is about
    ``1 / (1 + 2 * noise)`` while different blocks never overlap.
    """
    if n_points < 2 or n < 1:
        raise InvalidN("need n_points >= 2 and n >= 1")
    if not 1 <= n_queries <= n_points:
        raise InvalidN("n_queries must lie in [1, n_points]")
    if 2 * n * n_points > UNIVERSE // 2:
        raise InvalidN("dense blocks do not fit below 2**31")
    rng = np.random.default_rng(seed)
    extra = int(round(noise * n))
    n_private = (n_points + n_queries) * extra
    private = _distinct_uniform(rng, n_private, UNIVERSE // 2, UNIVERSE)
    private = private.reshape(n_points + n_queries, extra)
    dense = []
    corpus = []
    for i in range(n_points):
        block = 2 * n * i + np.flatnonzero(rng.random(2 * n) < 0.5)
        dense.append(block)
        corpus.append(np.union1d(block, private[i]).astype(np.uint32))
    partners = [int(p) for p in np.linspace(0, n_points - 1, n_queries).round().astype(int)]
    queries = [np.union1d(dense[p], private[n_points + q]).astype(np.uint32)
               for q, p in enumerate(partners)]
    return LshCorpus(corpus, queries, partners)


# ---------------------------------------------------------------------------
# text formats

def _parse_label(tok: str):
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def parse_libsvm(stream: Union[TextIO, str, Iterable[str]]) -> list[LabeledVector]:
    """Parse LIBSVM lines ``label idx:val idx:val ...`` with 1-based indices.

    Indices become 0-based. Blank lines are skipped and anything after ``#``
    is ignored. Columns in errors are 1-based character offsets.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    out = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].rstrip("\r\n")
        tokens = []
        pos = 0
        for tok in line.split():
            pos = line.index(tok, pos)
            tokens.append((pos + 1, tok))
            pos += len(tok)
        if not tokens:
            continue
        col, label_tok = tokens[0]
        try:
            label = _parse_label(label_tok)
        except ValueError:
            raise ParseError(f"bad label {label_tok!r}", lineno, col) from None
        indices, weights = [], []
        prev = 0
        for col, tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(f"expected index:value, got {tok!r}", lineno, col)
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(f"bad index {idx_s!r}", lineno, col) from None
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(f"bad value {val_s!r}", lineno, col + len(idx_s) + 1) from None
            if idx <= prev:
                raise ParseError(f"index {idx} is not strictly increasing (1-based)", lineno, col)
            if idx > 1 << 32:
                raise ParseError(f"index {idx} exceeds the 32-bit range", lineno, col)
            if not math.isfinite(val):
                raise ParseError(f"non-finite value {val_s!r}", lineno, col + len(idx_s) + 1)
            prev = idx
            indices.append(idx - 1)
            weights.append(val)
        out.append(LabeledVector(label, SparseVector(np.array(indices, dtype=np.int64),
                                                     np.array(weights, dtype=np.float64))))
    return out


def format_libsvm(vectors: Iterable[LabeledVector]) -> str:
    """Inverse of :func:`parse_libsvm`; floats use ``repr`` so they round-trip."""
    lines = []
    for lv in vectors:
        parts = [repr(lv.label)]
        parts += [f"{int(i) + 1}:{float(w)!r}" for i, w in zip(lv.features.indices,
                                                             lv.features.weights)]
        lines.append(" ".join(parts))
    return "".join(line + "\n" for line in lines)


def format_pair(pair: SynthPair) -> str:
    """Two lines of space-separated sorted keys, ``A`` first."""
    return (" ".join(map(str, pair.a.tolist())) + "\n"
            + " ".join(map(str, pair.b.tolist())) + "\n")


def parse_pair(text: str) -> SynthPair:
    lines = text.split("\n")
    if len(lines) < 2:
        raise ValueError("pair dump needs two lines")
    a = np.array([int(t) for t in lines[0].split()], dtype=np.int64)
    b = np.array([int(t) for t in lines[1].split()], dtype=np.int64)
    return SynthPair(_as_set(a), _as_set(b), exact_jaccard(a, b))
