# Estimating Jaccard similarity with one permutation hashing.

import numpy as np

from hashlab import datagen, hashcore as hc
from hashlab.sketch import OphParams, estimate_similarity, oph_build, oph_densify, random_directions

# A pair with a dense shared block and a sparse symmetric difference.
pair = datagen.gen_synth_pair(2000, seed=3)
print("exact J", round(pair.exact_j, 4))

params = OphParams(k=200)


def estimate(family, seed):
    h = hc.seed_family(family, seed)
    dirs = random_directions(hc.seed_stream(seed, "densify"), params.k)
    sa = oph_densify(oph_build(pair.a, h, params), dirs, params)
    sb = oph_densify(oph_build(pair.b, h, params), dirs, params)
    return estimate_similarity(sa, sb)


# With a structured input the cheap families are visibly noisier.
for family in ("multiply-shift", "poly2", "mixed-tab", "poly20"):
    est = np.array([estimate(family, s) for s in range(300)])
    print(f"{family:15s} mean {est.mean():.4f}  mse {np.mean((est - pair.exact_j) ** 2):.5f}")
