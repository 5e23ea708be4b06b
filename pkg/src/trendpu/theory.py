"""
Executable checks of two analytical results.

1. Bayes score functions for two Gaussians N(+v, s^2 I) / N(-v, s^2 I):
   the PN log-odds ``g_pn``, the positive-vs-unlabeled score ``g_pu`` and the
   offset of its zero set along ``v``. With |P|/|U| = 1 (balanced
   resampling) that offset is 0, i.e. the balanced PN hyperplane.
2. A Monte Carlo coverage check of the concentration bound for the robust
   trend score around ``alpha * E[dp]``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, UnlearnableHyperplaneError
from .tpp_stats import psi

__all__ = [
    "HyperplaneSetting",
    "g_pn",
    "g_pu",
    "hyperplane_offset",
    "g_pu_root",
    "ConcentrationConfig",
    "CoverageReport",
    "concentration_bound",
    "concentration_experiment",
]


@dataclass(frozen=True)
class HyperplaneSetting:
    v: np.ndarray
    sigma: float
    pi: float
    ratio: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise ConfigurationError("v must be non-zero")
        object.__setattr__(self, "v", v / norm)
        if not self.sigma > 0:
            raise ConfigurationError("sigma must be positive")
        if not 0.0 < self.pi < 1.0:
            raise ConfigurationError("pi must lie in (0, 1)")
        if not self.ratio > 0:
            raise ConfigurationError("|P|/|U| ratio must be positive")


def _proj(x, setting: HyperplaneSetting):
    return np.asarray(x, dtype=float) @ setting.v


def g_pn(x, setting: HyperplaneSetting):
    """PN log-odds 2 v.x / sigma^2 + ln(pi / (1 - pi))."""
    s = _proj(x, setting)
    return 2.0 * s / setting.sigma ** 2 + math.log(setting.pi / (1.0 - setting.pi))


def g_pu(x, setting: HyperplaneSetting):
    """PU score -ln[(1 - pi) exp(-2 v.x / sigma^2) + pi] + ln(|P|/|U|).

    Evaluated with logaddexp so large |v.x| / sigma^2 stays finite.
    """
    s = _proj(x, setting)
    a = math.log(1.0 - setting.pi) - 2.0 * s / setting.sigma ** 2
    return -np.logaddexp(a, math.log(setting.pi)) + math.log(setting.ratio)


def hyperplane_offset(setting: HyperplaneSetting) -> float:
    """Signed position s along v where g_pu vanishes (x = s v)."""
    r, pi = setting.ratio, setting.pi
    if r <= pi:
        raise UnlearnableHyperplaneError(
            f"|P|/|U| = {r} <= pi = {pi}: the decision hyperplane is unlearnable")
    # + 0.0 turns a -0.0 result into 0.0
    return -setting.sigma ** 2 * (math.log(r - pi) - math.log(1.0 - pi)) / 2.0 + 0.0


def g_pu_root(setting: HyperplaneSetting, xtol: float = 1e-14) -> float:
    """Numerically locate the zero of g_pu along v by bracketing + Brent."""
    f = lambda s: float(g_pu(s * setting.v, setting))
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if f(lo) < 0.0 < f(hi):
            break
        lo, hi = 2.0 * lo, 2.0 * hi
    else:
        raise UnlearnableHyperplaneError("g_pu has no sign change along v")
    if f(0.0) == 0.0:
        return 0.0
    return brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


# -- concentration --------------------------------------------------------------------

@dataclass(frozen=True)
class ConcentrationConfig:
    t: int
    alpha: float = 2.0
    mu: float = 0.1
    sigma_d: float = 0.2
    epsilon: float = 0.05
    trials: int = 1000
    seed: int = 0


def _bound_ratio(t, alpha, sigma, epsilon) -> float:
    return 2.0 * math.log(1.0 / epsilon) / (t * (t - 1) * alpha ** 2 * sigma ** 2)


def concentration_bound(t: int, alpha: float, sigma: float, epsilon: float) -> float:
    """2 a s sqrt(2 ln(1/e) / (t(t-1))) / (1 - sqrt(2 ln(1/e) / (t(t-1) a^2 s^2)))."""
    if t < 2:
        raise ConfigurationError(f"t must be >= 2, got {t}")
    if not 0.0 < epsilon < 1.0:
        raise ConfigurationError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not (alpha > 0 and sigma > 0):
        raise ConfigurationError("alpha and sigma must be positive")
    ratio = _bound_ratio(t, alpha, sigma, epsilon)
    if ratio >= 1.0:
        raise ConfigurationError(
            f"bound denominator is not positive: 2 ln(1/epsilon) / (t(t-1) alpha^2 sigma^2) "
            f"= {ratio:.4g} >= 1 (t={t}, alpha={alpha}, sigma={sigma}, epsilon={epsilon})")
    num = 2.0 * alpha * sigma * math.sqrt(2.0 * math.log(1.0 / epsilon) / (t * (t - 1)))
    return num / (1.0 - math.sqrt(ratio))


@dataclass
class CoverageReport:
    config: ConcentrationConfig
    bound: float
    deviations: np.ndarray       # |S_hat - alpha * mu| per trial
    plugin_gaps: np.ndarray      # |alpha * mean(dp) - S_hat| per trial

    @property
    def inside(self) -> np.ndarray:
        return self.deviations < self.bound

    @property
    def coverage(self) -> float:
        return float(np.mean(self.inside))

    @property
    def median_deviation(self) -> float:
        return float(np.median(self.deviations))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "deviation", "bound", "inside"])
            for k, (d, ok) in enumerate(zip(self.deviations.tolist(), self.inside.tolist())):
                w.writerow([k, repr(d), repr(self.bound), int(ok)])
            w.writerow(["summary", repr(self.median_deviation), repr(self.bound), repr(self.coverage)])


def concentration_experiment(config: ConcentrationConfig) -> CoverageReport:
    """Draw t(t-1)/2 i.i.d. N(mu, sigma_d^2) differences per trial and score them.

    Each trial has its own seed spawned from ``config.seed``, so results do
    not depend on evaluation order.
    """
    bound = concentration_bound(config.t, config.alpha, config.sigma_d, config.epsilon)
    if config.trials < 1:
        raise ConfigurationError("trials must be positive")
    m = config.t * (config.t - 1) // 2
    children = np.random.SeedSequence(config.seed).spawn(config.trials)
    dev = np.empty(config.trials)
    gap = np.empty(config.trials)
    for k, child in enumerate(children):
        dp = np.random.default_rng(child).normal(config.mu, config.sigma_d, size=m)
        s_hat = float(np.mean(psi(config.alpha * dp)))
        dev[k] = abs(s_hat - config.alpha * config.mu)
        gap[k] = abs(config.alpha * float(np.mean(dp)) - s_hat)
    return CoverageReport(config, bound, dev, gap)
