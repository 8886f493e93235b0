"""``hashlab`` command line: run one experiment and write its report.

Exit status is 0 on success, 2 for a bad configuration and 1 when the run
itself fails (unreadable or malformed input files, I/O errors).
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import datagen, experiments
from .hashcore import FamilyId
from .sketch import COMBINED, INDEPENDENT

log = logging.getLogger("hashlab")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _reps(text: str) -> int:
    v = _positive(text)
    if v < experiments.MIN_REPS:
        raise argparse.ArgumentTypeError(f"need at least {experiments.MIN_REPS} repetitions")
    return v


def _families(text: str) -> list[str]:
    try:
        return [str(FamilyId.parse(t)) for t in text.split(",") if t.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _add_globals(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=_u64, default=d(0), help="master seed (u64)")
    p.add_argument("--out", default=d("results"), help="output directory")
    p.add_argument("--format", choices=("json", "csv", "both"), default=d("both"))
    p.add_argument("--families", type=_families, default=d(None),
                   help="comma-separated, e.g. multiply-shift,poly2,poly20,mixed-tab,murmur3")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hashlab", description=__doc__.splitlines()[0])
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help):
        p = sub.add_parser(name, help=help)
        _add_globals(p, suppress=True)
        return p

    p = cmd("bench-time", "time every family on the same random keys")
    p.add_argument("--n-keys", type=_positive, default=10 ** 7)
    p.add_argument("--passes", type=_positive, default=5)

    p = cmd("oph-synth", "OPH similarity estimates on a synthetic pair")
    p.add_argument("--n", type=_positive, default=2000)
    p.add_argument("--k", type=_positive, default=200)
    p.add_argument("--reps", type=_reps, default=2000)
    p.add_argument("--dataset", choices=("v1", "v2"), default="v1")
    p.add_argument("--split", choices=(datagen.ALTERNATE, datagen.RANDOM),
                   default=datagen.ALTERNATE)

    p = cmd("fh-synth", "feature hashing norms on a synthetic unit vector")
    p.add_argument("--n", type=_positive, default=2000)
    p.add_argument("--d-prime", type=_positive, default=200)
    p.add_argument("--reps", type=_reps, default=2000)
    p.add_argument("--variant", choices=(datagen.INDICATOR_2N, datagen.DENSE_3N),
                   default=datagen.INDICATOR_2N)
    p.add_argument("--sign-mode", choices=(INDEPENDENT, COMBINED), default=INDEPENDENT)

    p = cmd("fh-real", "feature hashing norms over a LIBSVM file")
    p.add_argument("libsvm_path")
    p.add_argument("--d-prime", type=_positive, default=128)
    p.add_argument("--reps", type=_positive, default=100)
    p.add_argument("--sign-mode", choices=(INDEPENDENT, COMBINED), default=INDEPENDENT)

    p = cmd("lsh-eval", "retrieval metrics of a (K, L) OPH index")
    p.add_argument("--K", dest="big_k", type=_positive, default=10)
    p.add_argument("--L", dest="big_l", type=_positive, default=10)
    p.add_argument("--t0", type=float, default=0.4)
    p.add_argument("--n-points", type=_positive, default=1000)
    p.add_argument("--n", type=_positive, default=100)
    p.add_argument("--n-queries", type=_positive, default=30)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--libsvm", dest="libsvm_path", default=None)
    p.add_argument("--queries-equal-corpus", action="store_true")

    p = cmd("gap-stats", "spread/clustering of PolyHash values on consecutive keys")
    p.add_argument("--n", type=_positive, default=100)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--trials", type=_positive, default=1000)
    p.add_argument("--linear", action="store_true", help="plain instead of circular distance")
    return parser


def _run(args):
    fams = args.families
    c = args.command
    if c == "bench-time":
        return experiments.cmd_bench_time(args.n_keys, fams or experiments.BENCH_FAMILIES,
                                          args.seed, args.passes)
    fams = fams or list(experiments.DEFAULT_FAMILIES)
    if c == "oph-synth":
        return experiments.cmd_oph_synth(args.n, args.k, args.reps, fams, args.seed,
                                         args.dataset, args.split)
    if c == "fh-synth":
        return experiments.cmd_fh_synth(args.n, args.d_prime, args.reps, fams, args.seed,
                                        args.variant, args.sign_mode)
    if c == "fh-real":
        return experiments.cmd_fh_real(args.libsvm_path, args.d_prime, args.reps, fams,
                                       args.seed, args.sign_mode)
    if c == "lsh-eval":
        return experiments.cmd_lsh_eval(args.big_k, args.big_l, args.n_points, args.n,
                                        args.n_queries, args.noise, args.t0, fams, args.seed,
                                        args.libsvm_path, args.queries_equal_corpus)
    if c == "gap-stats":
        gap_fams = args.families or ["poly2", "poly20"]
        return experiments.cmd_gap_stats(args.n, args.eps, args.trials, args.seed, gap_fams,
                                         circular=not args.linear)
    raise ValueError(f"unknown command {c}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        report = _run(args)
    except (OSError, datagen.ParseError, experiments.EmptyDataset) as e:
        print(f"hashlab: error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"hashlab: config error: {e}", file=sys.stderr)
        return 2
    try:
        paths = experiments.emit_report(report, args.format, args.out)
    except OSError as e:
        print(f"hashlab: error: {e}", file=sys.stderr)
        return 1
    for p in paths:
        log.info("wrote %s", p)
    log.info("%s finished in %.2fs", report.name, report.wall_clock_s)
    return 0


if __name__ == "__main__":
    sys.exit(main())
