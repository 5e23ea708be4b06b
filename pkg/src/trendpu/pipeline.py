"""
End-to-end trend-based PU training.

Stages, in order: balanced PU training with periodic score snapshots
(``train_and_trace``), choice of the stopping snapshot (``select_stop``),
per-example trend scores (``compute_trend_scores``), natural-break
pseudo-labels (``jenks.partition_by_trend``), class-prior estimate,
supervised retraining on the pseudo-labels and evaluation.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Mapping

import numpy as np

from . import jenks, tpp_stats
from .data import LabeledDataset, PUDataset, balanced_batches, reveal_truth
from .errors import (
    ConfigurationError,
    DegeneratePartitionError,
    EvaluationUnavailableError,
    NumericError,
    ParseError,
    ShapeError,
    StageError,
)
from .jenks import PseudoLabel
from .model import (
    AdamState,
    ModelParams,
    ModelSpec,
    adam_step,
    init_params,
    predict_scores,
    pu_loss_and_grads,
    weighted_loss_and_grads,
)
from .tpp_stats import Estimator, TrendScoreParams

logger = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "TraceMatrix",
    "Metrics",
    "RunReport",
    "train_and_trace",
    "select_stop",
    "compute_trend_scores",
    "estimate_prior",
    "whole_data_prior",
    "retrain",
    "roc_auc",
    "evaluate",
    "run_pipeline",
    "write_traces",
    "read_traces",
    "write_scores",
    "read_scores",
]

STOPPING = ("fixed", "mixup")
MIXUP_HOLDOUT = 0.2
MIXUP_MIN_POSITIVES = 5
MIXUP_COEF = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    hidden_dims: tuple = ()
    lr: float = 1e-3
    batch_size: int = 64
    snapshot_interval: int = 512
    max_snapshots: int = 30
    alpha: float = 2.0
    estimator: Estimator = Estimator.FULL
    stopping: str = "fixed"
    retrain_epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        object.__setattr__(self, "estimator", Estimator(self.estimator))
        for name in ("batch_size", "snapshot_interval", "max_snapshots", "retrain_epochs"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be a positive integer")
        if not (self.lr > 0 and math.isfinite(self.lr)):
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha}")
        if self.stopping not in STOPPING:
            raise ConfigurationError(f"stopping must be one of {STOPPING}, got {self.stopping!r}")

    @property
    def trend_params(self) -> TrendScoreParams:
        return TrendScoreParams(self.alpha, self.estimator)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            if isinstance(val, Estimator):
                val = val.value
            elif isinstance(val, tuple):
                val = ",".join(str(v) for v in val)
            out[f.name] = val
        return out

    @classmethod
    def from_dict(cls, values: Mapping) -> "PipelineConfig":
        """Build from (possibly string-valued) key/value pairs; unknown keys are rejected."""
        types = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in types:
                raise ConfigurationError(f"unknown configuration key {key!r}")
            default = types[key].default
            try:
                if isinstance(default, tuple):
                    val = tuple(int(v) for v in str(raw).split(",") if v.strip()) \
                        if isinstance(raw, str) else tuple(raw)
                elif isinstance(default, bool):
                    val = str(raw).lower() in ("1", "true", "yes")
                elif isinstance(default, int) and not isinstance(default, Estimator):
                    val = int(raw)
                elif isinstance(default, float):
                    val = float(raw)
                else:
                    val = raw
            except ValueError:
                raise ConfigurationError(f"bad value for {key!r}: {raw!r}") from None
            kwargs[key] = val
        return cls(**kwargs)


@dataclass
class TraceMatrix:
    """Positive-class probabilities of every unlabeled row at each snapshot.

    ``validation`` holds the mixup validation score per snapshot when that
    stopping strategy is active.
    """

    scores: np.ndarray
    ids: np.ndarray
    snapshot_interval: int
    truth: np.ndarray | None = None
    validation: np.ndarray | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2 or self.scores.shape[0] != len(self.ids):
            raise ShapeError("trace matrix must be (n_unlabeled, n_snapshots) aligned with ids")

    @property
    def n_snapshots(self) -> int:
        return self.scores.shape[1]

    def rows(self, t_stop: int | None = None) -> dict:
        t = self.n_snapshots if t_stop is None else t_stop
        return {k: self.scores[r, :t] for r, k in enumerate(self.ids.tolist())}


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    n: int

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunReport:
    config: dict
    pseudo_labels: dict
    trend_scores: dict
    break_index: int
    break_objective: float
    break_threshold: float
    n_pseudo_positive: int
    n_pseudo_negative: int
    prior: float
    prior_whole: float
    t_stop: int
    estimator_agreement: float
    unlabeled_metrics: Metrics | None = None
    test_metrics: Metrics | None = None
    timings: dict = field(default_factory=dict)

    def to_text(self, include_timings: bool = False) -> str:
        """Deterministic ``key=value`` serialization (timings excluded by default)."""
        lines = [f"config.{k}={v}" for k, v in self.config.items()]
        lines += [
            f"t_stop={self.t_stop}",
            f"break.index={self.break_index}",
            f"break.objective={self.break_objective!r}",
            f"break.threshold={self.break_threshold!r}",
            f"break.n_pseudo_positive={self.n_pseudo_positive}",
            f"break.n_pseudo_negative={self.n_pseudo_negative}",
            f"prior.unlabeled={self.prior!r}",
            f"prior.whole={self.prior_whole!r}",
            f"estimator_agreement={self.estimator_agreement!r}",
        ]
        for name, m in (("unlabeled", self.unlabeled_metrics), ("test", self.test_metrics)):
            if m is not None:
                lines += [f"{name}.{k}={v!r}" for k, v in m.as_dict().items()]
        if include_timings:
            lines += [f"timing.{k}={v:.6f}" for k, v in self.timings.items()]
        return "\n".join(lines) + "\n"


# -- training with trace recording --------------------------------------------

def _seeds(seed: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), *path])


def _mixup_split(pu: PUDataset, config: PipelineConfig):
    """Return (training positive rows, held-out positive rows or None)."""
    pos = pu.labeled_index
    if config.stopping != "mixup":
        return pos, None
    if pos.shape[0] < MIXUP_MIN_POSITIVES:
        warnings.warn(
            f"mixup validation needs >= {MIXUP_MIN_POSITIVES} labeled positives, "
            f"got {pos.shape[0]}; using the fixed stopping snapshot", stacklevel=3)
        return pos, None
    rng = np.random.default_rng(_seeds(config.seed, 3))
    n_hold = max(1, int(round(MIXUP_HOLDOUT * pos.shape[0])))
    perm = rng.permutation(pos.shape[0])
    return np.sort(pos[perm[n_hold:]]), np.sort(pos[perm[:n_hold]])


def _mixup_points(pu: PUDataset, holdout: np.ndarray, seed: int) -> np.ndarray:
    rng = np.random.default_rng(_seeds(seed, 4))
    unl = pu.unlabeled_index
    partners = unl[rng.integers(0, unl.shape[0], size=holdout.shape[0])]
    return MIXUP_COEF * pu.features[holdout] + (1.0 - MIXUP_COEF) * pu.features[partners]


def train_and_trace(pu: PUDataset, config: PipelineConfig):
    """Balanced PU training; snapshot the unlabeled scores every ``snapshot_interval`` steps.

    Stops after ``max_snapshots`` snapshots. Returns ``(TraceMatrix, ModelParams)``.
    """
    spec = ModelSpec(pu.dim, config.hidden_dims)
    params = init_params(spec, np.random.default_rng(_seeds(config.seed, 1)))
    state = AdamState.for_params(params, lr=config.lr)
    train_pos, holdout = _mixup_split(pu, config)
    mix = _mixup_points(pu, holdout, config.seed) if holdout is not None else None

    x_unl = pu.features[pu.unlabeled_index]
    snapshots, validation = [], []
    step = 0
    epoch = 0
    while len(snapshots) < config.max_snapshots:
        for pair in balanced_batches(pu, config.batch_size, _seeds(config.seed, 2, epoch), train_pos):
            loss, grads = pu_loss_and_grads(params, pair.positive_batch, pair.unlabeled_batch)
            step += 1
            if not math.isfinite(loss):
                raise NumericError(f"non-finite training loss at step {step}")
            params, state = adam_step(params, grads, state)
            if step % config.snapshot_interval == 0:
                snapshots.append(predict_scores(params, x_unl))
                if mix is not None:
                    validation.append(float(np.mean(predict_scores(params, mix))))
                if len(snapshots) == config.max_snapshots:
                    break
        epoch += 1

    truth = reveal_truth(pu)[pu.unlabeled_index] if pu.has_truth else None
    traces = TraceMatrix(
        np.column_stack(snapshots), pu.unlabeled_ids.copy(), config.snapshot_interval,
        truth, np.array(validation) if mix is not None else None)
    logger.debug("trained %d steps (%d epochs), %d snapshots", step, epoch, len(snapshots))
    return traces, params


def select_stop(traces: TraceMatrix, pu: PUDataset | None, config: PipelineConfig) -> int:
    """Number of leading snapshots to use for trend scoring (1-based)."""
    if traces.n_snapshots < 2:
        raise ConfigurationError("at least 2 snapshots are required")
    if config.stopping == "fixed" or traces.validation is None:
        if config.stopping == "mixup":
            warnings.warn("no mixup validation scores recorded; using all snapshots", stacklevel=2)
        return traces.n_snapshots
    best = int(np.argmax(traces.validation)) + 1
    # trend scores need at least two points
    return max(best, 2)


def compute_trend_scores(traces: TraceMatrix, t_stop: int,
                         params: TrendScoreParams | None = None) -> dict:
    if not 2 <= t_stop <= traces.n_snapshots:
        raise ConfigurationError(
            f"t_stop must lie in [2, {traces.n_snapshots}], got {t_stop}")
    return tpp_stats.score_all(traces.rows(t_stop), params)


def estimate_prior(labels: Mapping[Hashable, PseudoLabel]) -> float:
    """Fraction of unlabeled examples pseudo-labelled positive."""
    if not labels:
        return 0.0
    return sum(1 for v in labels.values() if v == PseudoLabel.POSITIVE) / len(labels)


def whole_data_prior(prior: float, n_labeled: int, n_unlabeled: int) -> float:
    """Positive prior over labeled + unlabeled rows given the unlabeled prior."""
    return (n_labeled + prior * n_unlabeled) / (n_labeled + n_unlabeled)


def retrain(pu: PUDataset, labels: Mapping[Hashable, PseudoLabel],
            config: PipelineConfig) -> ModelParams:
    """Fresh model trained by plain cross-entropy on labeled positives + pseudo-labels."""
    unl_ids = pu.unlabeled_ids.tolist()
    missing = [k for k in unl_ids if k not in labels]
    if missing:
        raise ShapeError(f"{len(missing)} unlabeled rows have no pseudo-label (first: {missing[0]!r})")
    pseudo = np.array([int(labels[k]) for k in unl_ids], dtype=float)
    if pseudo.min() == pseudo.max():
        raise DegeneratePartitionError("one pseudo-class is empty")

    x = np.vstack([pu.features[pu.labeled_index], pu.features[pu.unlabeled_index]])
    y = np.concatenate([np.zeros(pu.n_labeled), pseudo])
    n = x.shape[0]
    bs = min(config.batch_size, n)

    spec = ModelSpec(pu.dim, config.hidden_dims)
    params = init_params(spec, np.random.default_rng(_seeds(config.seed, 5)))
    state = AdamState.for_params(params, lr=config.lr)
    for epoch in range(config.retrain_epochs):
        order = np.random.default_rng(_seeds(config.seed, 6, epoch)).permutation(n)
        for k in range(0, n - bs + 1, bs):
            idx = order[k:k + bs]
            loss, grads = weighted_loss_and_grads(params, x[idx], y[idx], np.full(bs, 1.0 / bs))
            if not math.isfinite(loss):
                raise NumericError(f"non-finite retraining loss in epoch {epoch}")
            params, state = adam_step(params, grads, state)
    return params


# -- evaluation -------------------------------------------------------------------

def roc_auc(scores, positive) -> float:
    """AUC as the Mann-Whitney rank statistic; tied pairs count one half.

    ``scores`` rank examples by how positive they look; ``positive`` is a
    boolean mask of the true positives.
    """
    from scipy.stats import rankdata

    s = np.asarray(scores, dtype=float)
    pos = np.asarray(positive, dtype=bool)
    n_pos = int(pos.sum())
    n_neg = pos.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(s)  # average ranks for ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _align(values, keys):
    if isinstance(values, Mapping):
        return np.array([values[k] for k in keys])
    return np.asarray(values)


def evaluate(predicted, truth, scores=None) -> Metrics:
    """Accuracy, precision, recall, F1 and AUC with positives = label 0.

    ``predicted`` and ``truth`` are aligned arrays or mappings keyed by
    example id. ``scores`` (higher = more positive) feed the AUC; without
    them the hard labels are ranked.
    """
    if truth is None:
        raise EvaluationUnavailableError("ground-truth labels are not available")
    keys = list(predicted.keys()) if isinstance(predicted, Mapping) else None
    pred = _align(predicted, keys).astype(int)
    true = _align(truth, keys).astype(int)
    if pred.shape != true.shape:
        raise ShapeError("predicted and true labels are not aligned")
    if pred.size == 0:
        raise ShapeError("nothing to evaluate")

    pp, tp = pred == 0, true == 0
    n_tp = int(np.sum(pp & tp))
    precision = n_tp / int(pp.sum()) if pp.any() else 0.0
    recall = n_tp / int(tp.sum()) if tp.any() else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    rank_by = (1.0 - pred) if scores is None else _align(scores, keys).astype(float)
    return Metrics(
        accuracy=float(np.mean(pp == tp)),
        precision=float(precision),
        recall=float(recall),
        f1=float(f1),
        auc=roc_auc(rank_by, tp),
        n=int(pred.size),
    )


# -- orchestration ----------------------------------------------------------------

def _stage(name, timings, fn, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - t0


def run_pipeline(config: PipelineConfig, pu: PUDataset, test: LabeledDataset | None = None,
                 out_dir=None) -> RunReport:
    """Run every stage; optionally persist traces, scores, model and report to ``out_dir``.

    Any failure is re-raised as :class:`StageError` naming the stage.
    """
    from .model import save_params

    timings: dict = {}
    traces, _ = _stage("train", timings, train_and_trace, pu, config)
    t_stop = _stage("select_stop", timings, select_stop, traces, pu, config)
    scores = _stage("score", timings, compute_trend_scores, traces, t_stop, config.trend_params)
    labels, brk = _stage("partition", timings, jenks.partition_by_trend, scores)

    # the other estimator's partition, for the consistency diagnostic
    other = Estimator.SIMPLIFIED if config.estimator != Estimator.SIMPLIFIED else Estimator.FULL
    alt_scores = compute_trend_scores(traces, t_stop, TrendScoreParams(config.alpha, other))
    try:
        alt_labels, _ = jenks.partition_by_trend(alt_scores)
        agreement = float(np.mean([labels[k] == alt_labels[k] for k in labels]))
    except ValueError:
        agreement = float("nan")

    prior = estimate_prior(labels)
    model = _stage("retrain", timings, retrain, pu, labels, config)

    unl_metrics = test_metrics = None
    if pu.has_truth:
        truth = dict(zip(pu.unlabeled_ids.tolist(), reveal_truth(pu)[pu.unlabeled_index].tolist()))
        unl_metrics = _stage("evaluate", timings, evaluate,
                             {k: int(v) for k, v in labels.items()}, truth, scores)
    if test is not None:
        p = predict_scores(model, test.features)
        test_metrics = _stage("evaluate", timings, evaluate,
                              (p < 0.5).astype(int), test.labels, p)

    sorted_vals = np.array(list(scores.values()))[brk.sorted_order]
    threshold = 0.5 * (sorted_vals[brk.break_index - 1] + sorted_vals[brk.break_index])
    n_pos = sum(1 for v in labels.values() if v == PseudoLabel.POSITIVE)
    report = RunReport(
        config=config.to_dict(),
        pseudo_labels=labels,
        trend_scores=scores,
        break_index=brk.break_index,
        break_objective=brk.objective,
        break_threshold=float(threshold),
        n_pseudo_positive=n_pos,
        n_pseudo_negative=len(labels) - n_pos,
        prior=prior,
        prior_whole=whole_data_prior(prior, pu.n_labeled, pu.n_unlabeled),
        t_stop=t_stop,
        estimator_agreement=agreement,
        unlabeled_metrics=unl_metrics,
        test_metrics=test_metrics,
        timings=timings,
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_traces(traces, out / "traces.csv")
        write_scores(scores, labels, out / "scores.csv")
        save_params(model, out / "model.csv")
        (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
        (out / "timings.txt").write_text(
            "".join(f"{k}={v:.6f}\n" for k, v in timings.items()), encoding="utf-8")
    return report


# -- files --------------------------------------------------------------------------

def write_traces(traces: TraceMatrix, path) -> None:
    """``example_id,true_label,p_1,...,p_T``; true_label is NA when unknown."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["example_id", "true_label"] + [f"p_{k + 1}" for k in range(traces.n_snapshots)])
        for r, key in enumerate(traces.ids.tolist()):
            label = "NA" if traces.truth is None else str(int(traces.truth[r]))
            w.writerow([key, label] + [repr(v) for v in traces.scores[r].tolist()])


def read_traces(path, snapshot_interval: int = 0) -> TraceMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["example_id", "true_label"]:
        raise ParseError("header must start with 'example_id,true_label'", 1)
    width = len(rows[0])
    if width < 3:
        raise ParseError("trace file has no snapshot columns", 1)
    ids, labels, vals = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, got {len(row)}", lineno)
        try:
            ids.append(int(row[0]))
        except ValueError:
            ids.append(row[0])
        if row[1] not in ("0", "1", "NA"):
            raise ParseError(f"true_label must be 0, 1 or NA, got {row[1]!r}", lineno)
        labels.append(None if row[1] == "NA" else int(row[1]))
        try:
            vals.append([float(c) for c in row[2:]])
        except ValueError as exc:
            raise ParseError(f"non-numeric score: {exc}", lineno) from None
    truth = None
    if labels and all(v is not None for v in labels):
        truth = np.array(labels, dtype=np.int64)
    scores = np.array(vals, dtype=float).reshape(len(vals), width - 2)
    return TraceMatrix(scores, np.array(ids), snapshot_interval, truth)


_LABEL_TEXT = {PseudoLabel.POSITIVE: "positive", PseudoLabel.NEGATIVE: "negative"}
_TEXT_LABEL = {v: k for k, v in _LABEL_TEXT.items()}


def write_scores(scores: Mapping, labels: Mapping | None, path) -> None:
    """``example_id,trend_score,pseudo_label``; pseudo_label is NA before partitioning."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["example_id", "trend_score", "pseudo_label"])
        for key, val in scores.items():
            lab = "NA" if labels is None else _LABEL_TEXT[PseudoLabel(labels[key])]
            w.writerow([key, repr(float(val)), lab])


def read_scores(path):
    """Return ``(scores, labels)``; labels is None if any row is NA."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["example_id", "trend_score", "pseudo_label"]:
        raise ParseError("header must be 'example_id,trend_score,pseudo_label'", 1)
    scores, labels = {}, {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", lineno)
        try:
            key = int(row[0])
        except ValueError:
            key = row[0]
        try:
            scores[key] = float(row[1])
        except ValueError:
            raise ParseError(f"non-numeric trend score {row[1]!r}", lineno) from None
        if row[2] == "NA":
            labels = None
        elif labels is not None:
            if row[2] not in _TEXT_LABEL:
                raise ParseError(f"pseudo_label must be positive, negative or NA, got {row[2]!r}", lineno)
            labels[key] = _TEXT_LABEL[row[2]]
    return scores, labels
