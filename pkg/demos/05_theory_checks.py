"""
Two analytical results, checked numerically
===========================================

1. With balanced resampling (|P| / |U| = 1) the PU decision boundary of two
   Gaussians coincides with the balanced PN boundary; with fewer positives
   it shifts, and once |P| / |U| <= pi it cannot be learned at all.
2. The robust trend score concentrates around alpha * E[dp] at a rate
   that improves roughly as 1 / t.
"""

import numpy as np

from trendpu.errors import UnlearnableHyperplaneError
from trendpu.theory import (
    ConcentrationConfig,
    HyperplaneSetting,
    concentration_experiment,
    g_pu_root,
    hyperplane_offset,
)

v = np.ones(5)
for ratio in (1.0, 0.9, 0.75, 0.6, 0.5):
    s = HyperplaneSetting(v, sigma=1.0, pi=0.5, ratio=ratio)
    try:
        print(f"|P|/|U| = {ratio:4.2f}: offset {hyperplane_offset(s):+.6f}, numeric root {g_pu_root(s):+.6f}")
    except UnlearnableHyperplaneError as exc:
        print(f"|P|/|U| = {ratio:4.2f}: {exc}")

print()
for t in (10, 20, 40):
    rep = concentration_experiment(ConcentrationConfig(t=t, trials=1000, seed=t))
    print(f"t={t:2d}: bound {rep.bound:.4f}, coverage {rep.coverage:.3f}, "
          f"median deviation {rep.median_deviation:.5f}")
