"""
Two-class Fisher (Jenks) natural break for one-dimensional data.

The objective for a split of the ascending-sorted values into a low cluster
of size b and a high cluster of size N - b is the sum of the two
population variances (squared deviations divided by cluster size).

``natural_break_fast`` sorts once and sweeps running Welford statistics in
both directions, O(N log N). ``natural_break_oracle`` recomputes every split
from scratch, O(N^2), and exists to check the fast path.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Mapping

import numpy as np

from .errors import DegenerateDistributionError, DomainError, SizeError

__all__ = [
    "BreakResult",
    "PseudoLabel",
    "split_objective",
    "running_m2",
    "natural_break_oracle",
    "natural_break_fast",
    "partition_by_trend",
]


class PseudoLabel(enum.IntEnum):
    """Pseudo-label of an unlabeled example; values follow the 0 = positive convention."""

    POSITIVE = 0
    NEGATIVE = 1


@dataclass(frozen=True)
class BreakResult:
    """Outcome of a two-way natural break.

    ``break_index`` is the size of the low cluster; ``sorted_order[k]`` is
    the original index of the k-th smallest value.
    """

    break_index: int
    objective: float
    sorted_order: np.ndarray

    @property
    def low_size(self) -> int:
        return self.break_index

    @property
    def high_size(self) -> int:
        return len(self.sorted_order) - self.break_index


def _prepare(values) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(values, dtype=float).ravel()
    if x.shape[0] < 2:
        raise SizeError(f"a natural break needs at least 2 values, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise DomainError("natural break input contains non-finite values")
    order = np.argsort(x, kind="stable")
    return x[order], order


def _admissible(sorted_x: np.ndarray) -> np.ndarray:
    """Split positions b in 1..N-1 that do not cut a run of equal values.

    Falls back to every position when the input is constant.
    """
    b = np.arange(1, sorted_x.shape[0])
    ok = sorted_x[b - 1] != sorted_x[b]
    return b[ok] if ok.any() else b


def split_objective(sorted_values, b: int) -> float:
    """Two-pass evaluation of the break objective at split ``b``."""
    x = np.asarray(sorted_values, dtype=float)
    low, high = x[:b], x[b:]
    return float(np.mean((low - low.mean()) ** 2) + np.mean((high - high.mean()) ** 2))


def running_m2(values) -> np.ndarray:
    """Welford running sum of squared deviations.

    ``out[n-1]`` equals sum((x[:n] - mean(x[:n]))**2).
    """
    x = np.asarray(values, dtype=float)
    out = np.empty_like(x)
    mean = 0.0
    m2 = 0.0
    for n, xn in enumerate(x.tolist(), start=1):
        delta = xn - mean
        mean += delta / n
        # (n-1) var_n = (n-2) var_{n-1} + (n-1)/n * (x_n - mean_{n-1})^2
        m2 += delta * (xn - mean)
        out[n - 1] = m2
    return out


def natural_break_oracle(values) -> BreakResult:
    """Exhaustive O(N^2) search over every contiguous split."""
    x, order = _prepare(values)
    best_b, best = -1, np.inf
    for b in _admissible(x).tolist():
        obj = split_objective(x, b)
        if obj < best:
            best_b, best = b, obj
    return BreakResult(best_b, best, order)


def natural_break_fast(values) -> BreakResult:
    """Sort once, sweep running statistics both ways, scan all splits."""
    x, order = _prepare(values)
    n = x.shape[0]
    counts = np.arange(1, n + 1, dtype=float)
    prefix = running_m2(x) / counts                 # prefix[k]: first k+1 values
    suffix = running_m2(x[::-1])[::-1] / counts[::-1]  # suffix[k]: values k..n-1

    b = _admissible(x)
    cost = prefix[b - 1] + suffix[b]
    k = int(np.argmin(cost))
    return BreakResult(int(b[k]), float(cost[k]), order)


def partition_by_trend(scores: Mapping[Hashable, float]):
    """Split trend scores at the natural break.

    The high-score cluster is labelled PseudoLabel.POSITIVE and the low
    cluster PseudoLabel.NEGATIVE. Returns ``(labels, BreakResult)``.
    """
    keys = list(scores.keys())
    values = np.array([scores[k] for k in keys], dtype=float)
    if values.shape[0] < 2:
        raise SizeError(f"partition needs at least 2 examples, got {values.shape[0]}")
    if np.all(values == values[0]):
        raise DegenerateDistributionError(
            f"all {values.shape[0]} trend scores equal {values[0]!r}; no natural break exists"
        )
    result = natural_break_fast(values)
    labels = {}
    for pos, idx in enumerate(result.sorted_order.tolist()):
        labels[keys[idx]] = PseudoLabel.NEGATIVE if pos < result.break_index else PseudoLabel.POSITIVE
    # keep the caller's key order
    return {k: labels[k] for k in keys}, result
