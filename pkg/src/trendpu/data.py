"""
Datasets: synthetic two-Gaussian generation, SCAR positive-unlabeled
splitting, CSV persistence and the balanced positive/unlabeled batch sampler.

Label convention: 0 = positive, 1 = negative.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import (
    ConfigurationError,
    EvaluationUnavailableError,
    ParseError,
    ShapeError,
    SizeError,
)

__all__ = [
    "GaussianConfig",
    "LabeledDataset",
    "PUDataset",
    "BatchPair",
    "gen_two_gaussians",
    "make_pu_split",
    "reveal_truth",
    "save_csv",
    "load_csv",
    "balanced_batches",
]


@dataclass(frozen=True)
class GaussianConfig:
    """Two isotropic Gaussians N(+v, sigma^2 I) (positives) and N(-v, sigma^2 I)."""

    dim: int
    sigma: float
    n: int
    pi: float
    direction: tuple | None = None

    def __post_init__(self):
        if self.dim < 1 or self.n < 1:
            raise ConfigurationError("dim and n must be positive")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.pi < 1.0:
            raise ConfigurationError(f"pi must lie in (0, 1), got {self.pi}")
        if self.direction is None:
            v = np.full(self.dim, 1.0 / math.sqrt(self.dim))
        else:
            v = np.asarray(self.direction, dtype=float)
            if v.shape != (self.dim,):
                raise ShapeError(f"direction must have length {self.dim}")
            norm = float(np.linalg.norm(v))
            if norm == 0.0:
                raise ConfigurationError("direction must be non-zero")
            if abs(norm - 1.0) > 1e-9:
                v = v / norm
        object.__setattr__(self, "direction", tuple(v.tolist()))

    @property
    def v(self) -> np.ndarray:
        return np.asarray(self.direction)

    @property
    def radius(self) -> float:
        """Cluster radius sigma * sqrt(dim); the task is nontrivial when this exceeds 2."""
        return self.sigma * math.sqrt(self.dim)

    @property
    def n_positive(self) -> int:
        return int(math.floor(self.pi * self.n + 0.5))


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    ids: np.ndarray


class PUDataset:
    """Features with a labeled-positive mask.

    Ground-truth labels, when known, are kept private and can only be
    obtained through :func:`reveal_truth`, which evaluation code calls.
    """

    def __init__(self, features, labeled, ids=None, truth=None):
        self.features = np.asarray(features, dtype=float)
        if self.features.ndim != 2:
            raise ShapeError("features must be a 2-D matrix")
        n = self.features.shape[0]
        self.labeled = np.asarray(labeled, dtype=bool)
        if self.labeled.shape != (n,):
            raise ShapeError("labeled mask must have one entry per row")
        self.ids = np.arange(n) if ids is None else np.asarray(ids)
        if self.ids.shape != (n,):
            raise ShapeError("ids must have one entry per row")
        if len(set(self.ids.tolist())) != n:
            raise ShapeError("row ids must be unique")
        if truth is not None:
            truth = np.asarray(truth, dtype=np.int64)
            if truth.shape != (n,):
                raise ShapeError("truth must have one entry per row")
            if np.any(truth[self.labeled] != 0):
                raise ConfigurationError("every labeled row must be a true positive (label 0)")
        self._truth = truth

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def has_truth(self) -> bool:
        return self._truth is not None

    @property
    def labeled_index(self) -> np.ndarray:
        return np.flatnonzero(self.labeled)

    @property
    def unlabeled_index(self) -> np.ndarray:
        return np.flatnonzero(~self.labeled)

    @property
    def n_labeled(self) -> int:
        return int(self.labeled.sum())

    @property
    def n_unlabeled(self) -> int:
        return len(self) - self.n_labeled

    @property
    def unlabeled_ids(self) -> np.ndarray:
        return self.ids[~self.labeled]

    def __eq__(self, other):
        if not isinstance(other, PUDataset):
            return NotImplemented
        same_truth = (self._truth is None and other._truth is None) or (
            self._truth is not None and other._truth is not None
            and np.array_equal(self._truth, other._truth))
        return (np.array_equal(self.features, other.features)
                and np.array_equal(self.labeled, other.labeled)
                and np.array_equal(self.ids, other.ids) and same_truth)


def reveal_truth(pu: PUDataset) -> np.ndarray:
    """Hidden labels of every row (0 = positive). Evaluation use only."""
    if pu._truth is None:
        raise EvaluationUnavailableError("dataset carries no ground-truth labels")
    return pu._truth.copy()


@dataclass(frozen=True)
class BatchPair:
    positive_batch: np.ndarray
    unlabeled_batch: np.ndarray
    positive_rows: np.ndarray
    unlabeled_rows: np.ndarray


def gen_two_gaussians(config: GaussianConfig, seed) -> LabeledDataset:
    """Sample ``round(pi * n)`` positives from N(+v, sigma^2 I), the rest from N(-v, ...).

    Rows are shuffled; ``ids`` are 0..n-1 in output order.
    """
    n_pos = config.n_positive
    n_neg = config.n - n_pos
    if n_pos < 1 or n_neg < 1:
        raise ConfigurationError(
            f"degenerate class sizes: {n_pos} positives, {n_neg} negatives")
    if config.radius <= 2.0:
        warnings.warn(
            f"sigma*sqrt(dim) = {config.radius:.3f} <= 2: the two clusters barely overlap, "
            "the classification problem is close to trivial", stacklevel=2)
    rng = np.random.default_rng(seed)
    labels = np.concatenate([np.zeros(n_pos, dtype=np.int64), np.ones(n_neg, dtype=np.int64)])
    labels = labels[rng.permutation(config.n)]
    centers = np.where(labels[:, None] == 0, 1.0, -1.0) * config.v[None, :]
    x = centers + config.sigma * rng.standard_normal((config.n, config.dim))
    return LabeledDataset(x, labels, np.arange(config.n))


def make_pu_split(dataset: LabeledDataset, n_labeled: int, seed) -> PUDataset:
    """Label ``n_labeled`` positives chosen uniformly at random (SCAR)."""
    pos = np.flatnonzero(dataset.labels == 0)
    if n_labeled > pos.shape[0]:
        raise SizeError(f"n_labeled={n_labeled} exceeds the {pos.shape[0]} available positives")
    if n_labeled < 0:
        raise SizeError("n_labeled must be non-negative")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(pos, size=n_labeled, replace=False)
    labeled = np.zeros(dataset.labels.shape[0], dtype=bool)
    labeled[chosen] = True
    return PUDataset(dataset.features.copy(), labeled, dataset.ids.copy(), dataset.labels.copy())


# -- CSV ----------------------------------------------------------------------

def save_csv(pu: PUDataset, path) -> None:
    """Write ``id,label,labeled,f0,f1,...``; label is NA when truth is hidden."""
    truth = pu._truth
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label", "labeled"] + [f"f{k}" for k in range(pu.dim)])
        for r in range(len(pu)):
            label = "NA" if truth is None else str(int(truth[r]))
            writer.writerow([pu.ids[r], label, int(pu.labeled[r])]
                            + [repr(v) for v in pu.features[r].tolist()])


def _parse_id(text):
    try:
        return int(text)
    except ValueError:
        return text


def load_csv(path) -> PUDataset:
    """Parse a dataset CSV. The ``label`` column is optional.

    Raises :class:`ParseError` naming the offending line.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", 1)
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "id":
        raise ParseError("header must start with 'id'", 1)
    has_label = len(header) > 1 and header[1] == "label"
    lab_col = 2 if has_label else 1
    if len(header) <= lab_col or header[lab_col] != "labeled":
        raise ParseError("header must contain 'labeled' after 'id'[,'label']", 1)
    feat_cols = header[lab_col + 1:]
    if not feat_cols:
        raise ParseError("no feature columns", 1)
    for k, name in enumerate(feat_cols):
        if name != f"f{k}":
            raise ParseError(f"feature column {k} must be named 'f{k}', got {name!r}", 1)

    width = len(header)
    ids, labels, labeled, feats = [], [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", lineno)
        ids.append(_parse_id(row[0]))
        if has_label:
            cell = row[1].strip()
            if cell not in ("0", "1", "NA"):
                raise ParseError(f"label must be 0, 1 or NA, got {cell!r}", lineno)
            labels.append(None if cell == "NA" else int(cell))
        flag = row[lab_col].strip()
        if flag not in ("0", "1"):
            raise ParseError(f"labeled must be 0 or 1, got {flag!r}", lineno)
        labeled.append(flag == "1")
        try:
            feats.append([float(c) for c in row[lab_col + 1:]])
        except ValueError as exc:
            raise ParseError(f"non-numeric feature: {exc}", lineno) from None

    truth = None
    if has_label and labels and all(v is not None for v in labels):
        truth = np.array(labels, dtype=np.int64)
    features = np.array(feats, dtype=float).reshape(len(feats), len(feat_cols))
    try:
        return PUDataset(features, np.array(labeled, dtype=bool), np.array(ids), truth)
    except (ShapeError, ConfigurationError) as exc:
        raise ParseError(str(exc)) from None


# -- batches --------------------------------------------------------------------

def balanced_batches(pu: PUDataset, batch_size: int, epoch_seed,
                     positive_rows=None) -> Iterator[BatchPair]:
    """One epoch of equal-size positive/unlabeled batch pairs.

    The unlabeled rows are shuffled and cut into chunks of ``batch_size``
    (a short final chunk is dropped). Each chunk is paired with
    ``batch_size`` labeled positives drawn uniformly with replacement.
    ``positive_rows`` restricts the positive pool (e.g. to exclude a
    validation hold-out).
    """
    pos = pu.labeled_index if positive_rows is None else np.asarray(positive_rows)
    unl = pu.unlabeled_index
    if pos.shape[0] < 1:
        raise ConfigurationError("at least one labeled positive is required")
    if batch_size < 1 or unl.shape[0] < batch_size:
        raise ConfigurationError(
            f"need n_u >= batch size; n_u={unl.shape[0]}, batch size={batch_size}")
    rng = np.random.default_rng(epoch_seed)
    order = unl[rng.permutation(unl.shape[0])]
    for k in range(unl.shape[0] // batch_size):
        u_rows = order[k * batch_size:(k + 1) * batch_size]
        p_rows = pos[rng.integers(0, pos.shape[0], size=batch_size)]
        yield BatchPair(pu.features[p_rows], pu.features[u_rows], p_rows, u_rows)
