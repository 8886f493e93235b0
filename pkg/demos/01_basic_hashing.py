# Basic hash functions: what they compute and how fast they are.

import numpy as np

from hashlab import experiments, hashcore as hc

# Every family is seeded from one master seed, so the same seed gives the same function.
ms = hc.seed_family("multiply-shift", 1)
poly = hc.seed_family("poly2", 1)
mt = hc.seed_family("mixed-tab", 1)
print(ms, poly.name, [mt(x) for x in range(4)])

# The text dump lists every coefficient or table word.
print(hc.dump(ms))

# Arrays are hashed by compiled kernels; scalars give the same answers.
keys = np.arange(10, dtype=np.uint32)
assert mt.hash_array(keys).tolist() == [mt(int(x)) for x in keys]

# PolyHash reduces modulo 2**61 - 1 without division.
x = (1 << 127) + 12345
print(hc.mersenne_reduce(x) == x % hc.P)

# A short benchmark; the multiply-shift family is expected to win.
report = experiments.cmd_bench_time(10 ** 6, passes=3)
for fam, r in report.results.items():
    print(f"{fam:15s} {r['ns_per_key']:8.2f} ns/key")
