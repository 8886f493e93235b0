# Feature hashing: how well does the squared norm survive?

import numpy as np

from hashlab import datagen, hashcore as hc
from hashlab.sketch import FhParams, feature_hash, norm_sq

v = datagen.gen_fh_vector(2000, datagen.INDICATOR_2N, seed=5)
params = FhParams(d_prime=200)

for family in ("poly2", "mixed-tab", "poly20"):
    norms = []
    for seed in range(300):
        h = hc.seed_family(family, seed)
        sign = hc.seed_family(family, hc.derive_seed(seed, "sign"))
        norms.append(norm_sq(feature_hash(v, h, sign, params)))
    norms = np.array(norms)
    print(f"{family:10s} mean {norms.mean():.3f}  max {norms.max():.3f}  mse {np.mean((norms - 1) ** 2):.4f}")

# LIBSVM text parses into the same sparse vectors.
rows = datagen.parse_libsvm("1 1:0.5 4:1.5\n-1 2:2\n")
print(rows[0].features.pairs(), rows[1].label)
