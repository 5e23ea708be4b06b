"""
Trend statistics over per-example score traces.

A score trace is the sequence of positive-class probabilities one unlabeled
example receives at successive training snapshots. This module provides the
Mann-Kendall test (with tie correction) and three estimators of the mean
ordered difference of a trace: the plain pairwise mean, the robust
influence-function score over all ordered pairs, and its lag-1 simplification.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

import numpy as np

from .errors import DomainError, LengthError, ShapeError

__all__ = [
    "ScoreTrace",
    "Direction",
    "TrendVerdict",
    "Estimator",
    "TrendScoreParams",
    "psi",
    "mk_s_statistic",
    "mk_variance",
    "mk_test",
    "empirical_mean_score",
    "trend_score",
    "simplified_trend_score",
    "score_all",
]


@dataclass(frozen=True)
class ScoreTrace:
    example_id: Hashable
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        if scores.ndim != 1:
            raise ShapeError("trace scores must be one-dimensional")
        if not np.all(np.isfinite(scores)):
            raise DomainError(f"trace {self.example_id!r} has non-finite scores")
        if np.any((scores < 0.0) | (scores > 1.0)):
            raise DomainError(f"trace {self.example_id!r} has scores outside [0, 1]")
        object.__setattr__(self, "scores", scores)

    def __len__(self):
        return self.scores.shape[0]


class Direction(str, enum.Enum):
    INCREASING = "Increasing"
    DECREASING = "Decreasing"
    NO_TREND = "NoTrend"


@dataclass(frozen=True)
class TrendVerdict:
    s_statistic: int
    variance: float
    z_value: float
    gamma: float
    direction: Direction


class Estimator(str, enum.Enum):
    EMPIRICAL_MEAN = "empirical_mean"
    FULL = "full"
    SIMPLIFIED = "simplified"


@dataclass(frozen=True)
class TrendScoreParams:
    alpha: float = 2.0
    estimator: Estimator = Estimator.FULL

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be a positive finite number, got {self.alpha}")
        object.__setattr__(self, "estimator", Estimator(self.estimator))


def _values(trace) -> np.ndarray:
    """Return the score array of a trace (ScoreTrace or any 1-D sequence)."""
    if isinstance(trace, ScoreTrace):
        x = trace.scores
    else:
        x = np.asarray(trace, dtype=float)
        if x.ndim != 1:
            raise ShapeError("trace must be one-dimensional")
    if x.shape[0] < 2:
        raise LengthError(f"trend statistics need at least 2 snapshots, got {x.shape[0]}")
    return x


def psi(x):
    """Catoni-style influence function sign(x) * log(1 + |x| + x^2/2).

    Odd, strictly increasing and sub-linear (``|psi(x)| <= |x|``). Accepts
    scalars or arrays; raises ``DomainError`` on non-finite input.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("psi is undefined for non-finite input")
    a = np.abs(arr)
    out = np.sign(arr) * np.log1p(a + 0.5 * a * a)
    if out.ndim == 0:
        return float(out)
    return out


def _pair_differences(x: np.ndarray) -> np.ndarray:
    """All ordered differences x[j] - x[i] for i < j, row-major in i."""
    i, j = np.triu_indices(x.shape[0], k=1)
    return x[j] - x[i]


def mk_s_statistic(trace) -> int:
    """Mann-Kendall S: sum of sign(x_j - x_i) over all i < j."""
    x = _values(trace)
    return int(np.sign(_pair_differences(x)).sum())


def mk_variance(trace) -> float:
    """Tie-corrected variance of S.

    Tie groups are runs of bit-identical values; no tolerance is applied.
    """
    x = _values(trace)
    n = x.shape[0]
    _, counts = np.unique(x, return_counts=True)
    counts = counts[counts > 1].astype(np.int64)
    ties = int(np.sum(counts * (counts - 1) * (2 * counts + 5)))
    return (n * (n - 1) * (2 * n + 5) - ties) / 18.0


def _normal_two_sided(z: float) -> float:
    # 2 * (1 - Phi(|z|)) == erfc(|z| / sqrt(2))
    return math.erfc(abs(z) / math.sqrt(2.0))


def mk_test(trace, significance_level: float = 0.05) -> TrendVerdict:
    """Mann-Kendall trend test.

    A constant trace has zero variance; it is reported as NoTrend with
    ``z_value=0`` and ``gamma=1`` instead of dividing by zero.
    """
    if not 0.0 < significance_level < 1.0:
        raise DomainError(f"significance level must lie in (0, 1), got {significance_level}")
    s = mk_s_statistic(trace)
    var = mk_variance(trace)
    if var <= 0.0:
        return TrendVerdict(s, 0.0, 0.0, 1.0, Direction.NO_TREND)

    sd = math.sqrt(var)
    if s > 0:
        z = (s - 1) / sd
    elif s < 0:
        z = (s + 1) / sd
    else:
        z = 0.0
    gamma = _normal_two_sided(z)

    if gamma > significance_level or z == 0.0:
        direction = Direction.NO_TREND
    elif z > 0:
        direction = Direction.INCREASING
    else:
        direction = Direction.DECREASING
    return TrendVerdict(s, var, z, gamma, direction)


def empirical_mean_score(trace) -> float:
    """Mean of p_j - p_i over all ordered pairs i < j."""
    x = _values(trace)
    t = x.shape[0]
    # each p_k appears k times with + and (t-1-k) times with -
    weights = 2.0 * np.arange(t) - (t - 1)
    # weights sum to zero; centring makes constant traces give exactly 0
    return float(weights @ (x - x[0])) * 2.0 / (t * (t - 1))


def trend_score(trace, params: TrendScoreParams | None = None) -> float:
    """Robust trend score: mean of psi(alpha * (p_j - p_i)) over all i < j."""
    params = params or TrendScoreParams()
    x = _values(trace)
    return float(np.mean(psi(params.alpha * _pair_differences(x))))


def simplified_trend_score(trace, params: TrendScoreParams | None = None) -> float:
    """Lag-1 trend score: mean of psi(alpha * (p_{i+1} - p_i))."""
    params = params or TrendScoreParams()
    x = _values(trace)
    return float(np.mean(psi(params.alpha * np.diff(x))))


_ESTIMATORS = {
    Estimator.EMPIRICAL_MEAN: lambda x, params: empirical_mean_score(x),
    Estimator.FULL: trend_score,
    Estimator.SIMPLIFIED: simplified_trend_score,
}


def score_all(traces, params: TrendScoreParams | None = None) -> dict:
    """Score a batch of traces with the estimator selected in ``params``.

    ``traces`` is either a mapping ``example_id -> scores`` or an iterable of
    :class:`ScoreTrace`. The result keeps the input order.
    """
    params = params or TrendScoreParams()
    if isinstance(traces, Mapping):
        items: Iterable = traces.items()
    else:
        items = ((tr.example_id, tr.scores) for tr in traces)

    fn = _ESTIMATORS[params.estimator]
    out = {}
    length = None
    for key, scores in items:
        x = _values(scores)
        if length is None:
            length = x.shape[0]
        elif x.shape[0] != length:
            raise ShapeError(
                f"all traces must share one length; {key!r} has {x.shape[0]}, expected {length}"
            )
        out[key] = fn(x, params)
    return out
