"""Hash families, OPH/feature-hashing sketches and LSH, plus the experiments
that compare them on structured inputs."""

from .hashcore import (MIXED_TAB, MULTIPLY_SHIFT, MURMUR3, P, POLY2, POLY20, FamilyId,
                       MixedTab, MultiplyShift, Murmur3, PolyHash, derive_seed, dump,
                       mersenne_reduce, murmur3_32, seed_family)
from .sketch import (EMPTY, FhParams, OphParams, SparseVector, estimate_similarity,
                     feature_hash, norm_sq, oph_build, oph_densify)
from .datagen import exact_jaccard, gen_synth_pair, gen_synth_pair_v2, parse_libsvm
from .lshindex import LshIndex, LshParams, bucket_fingerprint, eval_metrics, lsh_build

__version__ = "0.1.0"
