"""
Small binary classifiers in plain numpy.

The network is a stack of affine + ReLU layers ending in one sigmoid unit.
With no hidden layers it is logistic regression. The sigmoid output ``q`` is
P(y = 1); since positives carry label 0, the recorded positive-class score
is ``p = 1 - q``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import NumericError, ParseError, ShapeError, SizeError

__all__ = [
    "ModelSpec",
    "ModelParams",
    "AdamState",
    "LOG_CLIP",
    "init_params",
    "forward",
    "cross_entropy",
    "batch_loss",
    "backward",
    "pu_loss_and_grads",
    "weighted_loss_and_grads",
    "adam_step",
    "predict_scores",
    "save_params",
    "load_params",
]

LOG_CLIP = 1e-7


@dataclass(frozen=True)
class ModelSpec:
    input_dim: int
    hidden_dims: tuple = ()

    def __post_init__(self):
        if int(self.input_dim) < 1:
            raise ShapeError(f"input_dim must be >= 1, got {self.input_dim}")
        hidden = tuple(int(h) for h in self.hidden_dims)
        if any(h < 1 for h in hidden):
            raise ShapeError(f"hidden widths must be positive, got {hidden}")
        object.__setattr__(self, "input_dim", int(self.input_dim))
        object.__setattr__(self, "hidden_dims", hidden)

    @property
    def layer_sizes(self) -> tuple:
        return (self.input_dim, *self.hidden_dims, 1)


@dataclass
class ModelParams:
    """Per-layer weights (fan_in x fan_out) and biases (fan_out,)."""

    weights: list
    biases: list

    def arrays(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "ModelParams":
        return cls(list(arrays[0::2]), list(arrays[1::2]))

    def copy(self) -> "ModelParams":
        return ModelParams.from_arrays([a.copy() for a in self.arrays()])

    def zeros_like(self) -> "ModelParams":
        return ModelParams.from_arrays([np.zeros_like(a) for a in self.arrays()])

    @property
    def spec(self) -> ModelSpec:
        return ModelSpec(self.weights[0].shape[0], tuple(w.shape[1] for w in self.weights[:-1]))


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ModelParams, lr: float = 1e-3, **kw) -> "AdamState":
        if not lr > 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        zeros = [np.zeros_like(a) for a in params.arrays()]
        return cls(m=zeros, v=[z.copy() for z in zeros], lr=lr, **kw)


def init_params(spec: ModelSpec, rng) -> ModelParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias."""
    rng = np.random.default_rng(rng)
    weights, biases = [], []
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return ModelParams(weights, biases)


def _sigmoid(z):
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_matrix(params: ModelParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    d = params.weights[0].shape[0]
    if x.ndim != 2 or x.shape[1] != d:
        raise ShapeError(f"expected feature dimension {d}, got shape {x.shape}")
    return x


def _forward_cache(params: ModelParams, x: np.ndarray):
    acts = [x]
    h = x
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        h = z if k == last else np.maximum(z, 0.0)
        acts.append(h)
    q = _sigmoid(acts[-1][:, 0])
    return acts, q


def forward(params: ModelParams, x):
    """Sigmoid output q = P(y = 1) for one feature vector or a matrix of rows."""
    arr = np.asarray(x, dtype=float)
    _, q = _forward_cache(params, _as_matrix(params, arr))
    return float(q[0]) if arr.ndim == 1 else q


def cross_entropy(q, y):
    """Binary cross-entropy with q clamped to [1e-7, 1 - 1e-7]."""
    q = np.clip(np.asarray(q, dtype=float), LOG_CLIP, 1.0 - LOG_CLIP)
    y = np.asarray(y, dtype=float)
    out = -(y * np.log(q) + (1.0 - y) * np.log1p(-q))
    return float(out) if out.ndim == 0 else out


def _pu_design(params, positive_batch, unlabeled_batch):
    xp = _as_matrix(params, positive_batch)
    xu = _as_matrix(params, unlabeled_batch)
    if xp.shape[0] == 0 or xu.shape[0] == 0:
        raise SizeError("positive and unlabeled batches must be non-empty")
    x = np.vstack([xp, xu])
    y = np.concatenate([np.zeros(xp.shape[0]), np.ones(xu.shape[0])])
    w = np.concatenate([np.full(xp.shape[0], 1.0 / xp.shape[0]),
                        np.full(xu.shape[0], 1.0 / xu.shape[0])])
    return x, y, w


def weighted_loss_and_grads(params: ModelParams, x, y, sample_weight):
    """Loss sum_i w_i * CE(q_i, y_i) and its gradient by backpropagation.

    The gradient uses the unclamped q; clamping only guards the logarithm.
    """
    x = _as_matrix(params, x)
    acts, q = _forward_cache(params, x)
    y = np.asarray(y, dtype=float)
    sw = np.asarray(sample_weight, dtype=float)
    loss = float(np.sum(sw * cross_entropy(q, y)))

    delta = (sw * (q - y))[:, None]
    gw = [None] * len(params.weights)
    gb = [None] * len(params.weights)
    for k in range(len(params.weights) - 1, -1, -1):
        gw[k] = acts[k].T @ delta
        gb[k] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ params.weights[k].T) * (acts[k] > 0)
    return loss, ModelParams(gw, gb)


def batch_loss(params: ModelParams, positive_batch, unlabeled_batch) -> float:
    """Mean CE of positives against label 0 plus mean CE of unlabeled against label 1."""
    x, y, w = _pu_design(params, positive_batch, unlabeled_batch)
    _, q = _forward_cache(params, x)
    return float(np.sum(w * cross_entropy(q, y)))


def pu_loss_and_grads(params: ModelParams, positive_batch, unlabeled_batch):
    """:func:`batch_loss` and :func:`backward` from one forward pass."""
    x, y, w = _pu_design(params, positive_batch, unlabeled_batch)
    return weighted_loss_and_grads(params, x, y, w)


def backward(params: ModelParams, positive_batch, unlabeled_batch) -> ModelParams:
    """Analytic gradient of :func:`batch_loss` with respect to every parameter."""
    return pu_loss_and_grads(params, positive_batch, unlabeled_batch)[1]


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState):
    """One bias-corrected Adam update. Returns new ``(params, state)``."""
    p_arr, g_arr = params.arrays(), grads.arrays()
    if len(p_arr) != len(g_arr) or len(p_arr) != len(state.m):
        raise ShapeError("parameter, gradient and moment structures differ")
    for p, g, m in zip(p_arr, g_arr, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeError(f"shape mismatch: param {p.shape}, grad {g.shape}, moment {m.shape}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient at Adam step {state.step + 1}")

    step = state.step + 1
    bc1 = 1.0 - state.beta1 ** step
    bc2 = 1.0 - state.beta2 ** step
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arr, g_arr, state.m, state.v):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        new_p.append(p - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    new_state = AdamState(new_m, new_v, step, state.lr, state.beta1, state.beta2, state.eps)
    return ModelParams.from_arrays(new_p), new_state


def predict_scores(params: ModelParams, features) -> np.ndarray:
    """Positive-class probabilities p = 1 - q, one per row."""
    x = _as_matrix(params, features)
    _, q = _forward_cache(params, x)
    return 1.0 - q


# -- checkpoint dump --------------------------------------------------------

def save_params(params: ModelParams, path) -> None:
    """Write a flat CSV dump: ``# spec`` header, then ``layer,kind,row,col,value`` rows."""
    spec = params.spec
    hidden = ",".join(str(h) for h in spec.hidden_dims)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# input_dim={spec.input_dim} hidden_dims={hidden}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["layer", "kind", "row", "col", "value"])
        for k, (w, b) in enumerate(zip(params.weights, params.biases)):
            for (i, j), val in np.ndenumerate(w):
                writer.writerow([k, "w", i, j, repr(float(val))])
            for i, val in enumerate(b.tolist()):
                writer.writerow([k, "b", i, 0, repr(float(val))])


def load_params(path) -> ModelParams:
    """Read a dump written by :func:`save_params`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ParseError("missing '# input_dim=... hidden_dims=...' header", 1)
    try:
        fields = dict(tok.split("=", 1) for tok in lines[0][2:].split())
        hidden = tuple(int(h) for h in fields["hidden_dims"].split(",") if h)
        spec = ModelSpec(int(fields["input_dim"]), hidden)
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad spec header: {exc}", 1) from None

    sizes = spec.layer_sizes
    params = ModelParams([np.full((a, b), np.nan) for a, b in zip(sizes[:-1], sizes[1:])],
                         [np.full(b, np.nan) for b in sizes[1:]])
    if len(lines) < 2 or lines[1].strip() != "layer,kind,row,col,value":
        raise ParseError("expected column header 'layer,kind,row,col,value'", 2)
    for lineno, row in enumerate(csv.reader(lines[2:]), start=3):
        if len(row) != 5:
            raise ParseError(f"expected 5 fields, got {len(row)}", lineno)
        try:
            layer, kind, i, j, val = int(row[0]), row[1], int(row[2]), int(row[3]), float(row[4])
            if kind == "w":
                params.weights[layer][i, j] = val
            elif kind == "b":
                params.biases[layer][i] = val
            else:
                raise ValueError(f"unknown kind {kind!r}")
        except (ValueError, IndexError) as exc:
            raise ParseError(str(exc), lineno) from None
    if any(np.isnan(a).any() for a in params.arrays()):
        raise ParseError("checkpoint is missing parameter entries")
    return params
