"""
End-to-end: traces, trend scores, pseudo-labels, retraining
===========================================================

Two Gaussian classes in 50 dimensions, 200 labeled positives among 2000
rows. Training snapshots the unlabeled scores every quarter epoch; the
trend of each trace decides its pseudo-label.
"""

import numpy as np

from trendpu.data import GaussianConfig, gen_two_gaussians, make_pu_split
from trendpu.pipeline import PipelineConfig, run_pipeline, train_and_trace
from trendpu.tpp_stats import Direction, mk_test

data = gen_two_gaussians(GaussianConfig(dim=50, sigma=0.5, n=2000, pi=0.5), seed=0)
pu = make_pu_split(data, n_labeled=200, seed=1)
test = gen_two_gaussians(GaussianConfig(dim=50, sigma=0.5, n=1000, pi=0.5), seed=10_000)

steps_per_epoch = pu.n_unlabeled // 64
config = PipelineConfig(batch_size=64, snapshot_interval=steps_per_epoch // 4, max_snapshots=30, seed=0)

report = run_pipeline(config, pu, test)
print(report.to_text())

# what the traces look like: mean score per class over the snapshots
traces, _ = train_and_trace(pu, config)
neg = traces.scores[traces.truth == 1]
pos = traces.scores[traces.truth == 0]
print("snapshot   mean p (pos)   mean p (neg)")
for k in range(0, traces.n_snapshots, 5):
    print(f"{k + 1:8d}   {pos[:, k].mean():12.3f}   {neg[:, k].mean():12.3f}")

dec = lambda block: np.mean([mk_test(r).direction is Direction.DECREASING for r in block])
print(f"\nDecreasing verdicts: {dec(pos):.1%} of positives, {dec(neg):.1%} of negatives")
