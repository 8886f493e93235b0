# Similarity search with a (K, L) index, then the gap statistics of PolyHash.

from hashlab import datagen
from hashlab.gapstats import spread_trial
from hashlab.lshindex import LshIndex, LshParams, eval_metrics

data = datagen.gen_lsh_corpus(300, 100, seed=2, n_queries=10)
index = LshIndex.build(data.corpus, LshParams(10, 10), "mixed-tab", master=1)

metrics, records = eval_metrics(index, data.queries, data.corpus, t0=0.4)
print(metrics)
print("partner found:", sum(p in index.query(q) for q, p in zip(data.queries, data.partners)))

# Consecutive keys under a random line mod p land suspiciously evenly.
for family in ("poly2", "poly20"):
    r = spread_trial(family, n=100, trials=300, master=0)
    print(f"{family:7s} spread {r.spread_prob:.3f}  clustered {r.cluster_prob:.3f}")
