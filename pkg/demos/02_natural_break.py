"""
Natural break of trend scores
=============================

The unlabeled set is split in two at the point that minimises the sum of
the two clusters' variances. The fast scan uses running (Welford)
statistics; the exhaustive version recomputes each split from scratch.
"""

import time

import numpy as np

from trendpu.jenks import natural_break_fast, natural_break_oracle, partition_by_trend, running_m2

# the small worked case: two tight pairs
r = natural_break_fast([1.0, 2.0, 8.0, 9.0])
print(f"[1, 2, 8, 9] -> break after {r.break_index} values, objective {r.objective}")

# a bimodal sample like real trend scores: many negatives below zero
rng = np.random.default_rng(1)
scores = np.concatenate([rng.normal(-0.6, 0.15, 600), rng.normal(0.05, 0.1, 400)])

t0 = time.perf_counter()
fast = natural_break_fast(scores)
t_fast = time.perf_counter() - t0
t0 = time.perf_counter()
slow = natural_break_oracle(scores)
t_slow = time.perf_counter() - t0
print(f"fast  : index {fast.break_index}, objective {fast.objective:.10f}  ({t_fast * 1e3:.1f} ms)")
print(f"oracle: index {slow.break_index}, objective {slow.objective:.10f}  ({t_slow * 1e3:.1f} ms)")

# the running sum of squares matches a direct computation
x = rng.normal(size=1000)
print("Welford vs direct M2 at n=1000:", running_m2(x)[-1], np.sum((x - x.mean()) ** 2))

# pseudo-labels: the high-score side is positive
labels, brk = partition_by_trend({f"u{k}": float(s) for k, s in enumerate(scores)})
n_pos = sum(1 for v in labels.values() if v.name == "POSITIVE")
print(f"{n_pos} pseudo-positives of {len(labels)}, threshold near "
      f"{np.sort(scores)[brk.break_index - 1]:.3f} .. {np.sort(scores)[brk.break_index]:.3f}")
