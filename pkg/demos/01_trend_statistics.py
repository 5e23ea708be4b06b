"""
Trend statistics of a score trace
=================================

A score trace is the sequence of positive-class probabilities that one
unlabeled example receives at successive training snapshots. Here we build
two toy traces, one drifting down and one drifting up with noise, and look
at the Mann-Kendall verdict and the three trend scores.
"""

import numpy as np

from trendpu.tpp_stats import (
    Estimator,
    TrendScoreParams,
    empirical_mean_score,
    mk_test,
    psi,
    simplified_trend_score,
    trend_score,
)

rng = np.random.default_rng(0)
t = 30

# a negative example: the score decays as the model learns to reject it
down = np.clip(0.6 - 0.015 * np.arange(t) + 0.03 * rng.standard_normal(t), 0, 1)
# a positive example: slow rise with more noise
up = np.clip(0.45 + 0.008 * np.arange(t) + 0.05 * rng.standard_normal(t), 0, 1)

for name, trace in (("down", down), ("up", up)):
    v = mk_test(trace, 0.05)
    print(f"{name:>4}: S={v.s_statistic:5d}  Z={v.z_value:+.3f}  gamma={v.gamma:.2e}  -> {v.direction.value}")

# psi grows like log for large inputs, which damps isolated jumps
x = np.array([-4.0, -1.0, -0.1, 0.0, 0.1, 1.0, 4.0])
print("\npsi:", np.round(psi(x), 4))

# the three estimators agree in sign but weigh the pairs differently
params = TrendScoreParams(alpha=2.0)
for name, trace in (("down", down), ("up", up)):
    print(f"\n{name}: empirical mean {empirical_mean_score(trace):+.4f}, "
          f"robust {trend_score(trace, params):+.4f}, "
          f"lag-1 {simplified_trend_score(trace, params):+.4f}")

# one outlier snapshot moves the plain mean further than the robust score
spiky = down.copy()
spiky[5] = 1.0
print("\nwith a spike at snapshot 6:")
print(f"  empirical mean {empirical_mean_score(down):+.4f} -> {empirical_mean_score(spiky):+.4f}")
print(f"  robust / alpha {trend_score(down, params) / 2:+.4f} -> {trend_score(spiky, params) / 2:+.4f}")
