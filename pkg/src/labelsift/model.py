"""Minimal differentiable softmax classifier plus the artifacts detectors need:
probabilities, per-sample last-layer gradients, weak/strong feature views, and
a rolling prediction bank.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .core import ShapeError

_CHECKPOINT_MAGIC = b"NSLM"
_CHECKPOINT_VERSION = 1


@dataclass
class SoftmaxModel:
    """Single linear layer with softmax output.

    Only train_epoch mutates the parameters; every read path takes a snapshot
    of the current weights, so one writer and many readers coexist safely.
    """

    weights: np.ndarray  # (k, d)
    bias: np.ndarray     # (k,)
    learning_rate: float = 0.1
    epoch_counter: int = 0

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def init_model(num_classes: int, dim: int, learning_rate: float = 0.1) -> SoftmaxModel:
    """Zero-initialized model; softmax regression is convex so this is enough."""
    return SoftmaxModel(
        np.zeros((num_classes, dim)), np.zeros(num_classes), learning_rate
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict_proba(model: SoftmaxModel, features: np.ndarray) -> np.ndarray:
    """Rowwise class probabilities (each row sums to 1)."""
    return _softmax(np.asarray(features, dtype=np.float64) @ model.weights.T + model.bias)


def train_epoch(
    model: SoftmaxModel,
    features: np.ndarray,
    labels: np.ndarray,
    sample_weight: np.ndarray,
    seed: int,
    batch_size: int = 128,
) -> float:
    """One pass of mini-batch gradient descent on weighted cross-entropy.

    Each sample's loss is scaled by its weight in [0, 1]; zero-weight samples
    contribute nothing, so a 0/1 mask makes this equivalent to training on the
    selected subset. The shuffle is fixed by the seed. Returns the mean
    weighted loss over the epoch.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    w = np.asarray(sample_weight, dtype=np.float64)
    if not (len(x) == len(y) == len(w)):
        raise ShapeError("features, labels and sample_weight must agree in length")
    if w.min() < 0.0 or w.max() > 1.0:
        raise ValueError("sample weights must lie in [0, 1]")
    if w.sum() == 0.0:
        raise ValueError("all-zero sample weights: nothing to train on")

    order = np.random.default_rng(seed).permutation(len(x))
    loss_sum = 0.0
    for start in range(0, len(order), batch_size):
        rows = order[start : start + batch_size]
        wb = w[rows]
        wsum = wb.sum()
        probs = predict_proba(model, x[rows])
        picked = np.clip(probs[np.arange(len(rows)), y[rows]], 1e-300, None)
        loss_sum += float((wb * -np.log(picked)).sum())
        if wsum == 0.0:
            continue
        grad_z = probs.copy()
        grad_z[np.arange(len(rows)), y[rows]] -= 1.0
        grad_z *= (wb / wsum)[:, None]
        model.weights -= model.learning_rate * (grad_z.T @ x[rows])
        model.bias -= model.learning_rate * grad_z.sum(axis=0)
    model.epoch_counter += 1
    return loss_sum / float(w.sum())


def per_sample_gradients(model: SoftmaxModel, features: np.ndarray, target_class: int) -> np.ndarray:
    """Analytic gradient of 0.5 * ||onehot(c) - softmax(Wx + b)||^2 per sample.

    Flattened as (row-major weights, then bias), one row per input sample.
    The squared-error loss here is intentional: the coreset-style gradient
    clustering is defined on it, while training itself uses cross-entropy.
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    k = model.num_classes
    if not 0 <= target_class < k:
        raise ShapeError(f"target_class {target_class} outside [0, {k})")
    p = predict_proba(model, x)
    r = p.copy()
    r[:, target_class] -= 1.0  # residual p - onehot(c)
    rp = (r * p).sum(axis=1, keepdims=True)
    grad_z = p * (r - rp)
    grad_w = np.einsum("mk,md->mkd", grad_z, x).reshape(len(x), k * model.dim)
    return np.concatenate([grad_w, grad_z], axis=1)


def per_sample_gradient(model: SoftmaxModel, x: np.ndarray, target_class: int) -> np.ndarray:
    """Single-sample convenience wrapper around per_sample_gradients."""
    return per_sample_gradients(model, np.asarray(x)[None, :], target_class)[0]


@dataclass(frozen=True)
class AugmentationPolicy:
    """Feature-space stand-in for weak/strong image augmentation: Gaussian
    jitter for both views, plus coordinate dropout on the strong view."""

    weak_sigma: float = 0.1
    strong_sigma: float = 0.5
    strong_dropout: float = 0.25

    def __post_init__(self):
        if self.weak_sigma < 0.0:
            raise ValueError("weak_sigma must be >= 0")
        if self.strong_sigma < self.weak_sigma:
            raise ValueError("strong_sigma must be >= weak_sigma")
        if not 0.0 <= self.strong_dropout < 1.0:
            raise ValueError("strong_dropout must lie in [0, 1)")


def augmented_confidences(
    model: SoftmaxModel,
    features: np.ndarray,
    policy: AugmentationPolicy,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Softmax outputs on the weak and strong views, deterministic per seed."""
    x = np.asarray(features, dtype=np.float64)
    rng = np.random.default_rng(seed)
    weak = x if policy.weak_sigma == 0.0 else x + policy.weak_sigma * rng.standard_normal(x.shape)
    strong = x if policy.strong_sigma == 0.0 else x + policy.strong_sigma * rng.standard_normal(x.shape)
    if policy.strong_dropout > 0.0:
        strong = np.where(rng.random(x.shape) < policy.strong_dropout, 0.0, strong)
    return predict_proba(model, weak), predict_proba(model, strong)


@dataclass
class PredictionBank:
    """Ring buffer of the last `window` epochs' argmax predictions per sample,
    alongside the most recent probability matrix."""

    window: int
    history: list[np.ndarray] = field(default_factory=list)
    latest_probs: np.ndarray | None = None

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be a positive integer")

    @property
    def epochs_recorded(self) -> int:
        return len(self.history)

    def history_matrix(self) -> np.ndarray:
        """Epoch-ordered (epochs, n) matrix of argmax predictions."""
        if not self.history:
            raise ValueError("bank is empty")
        return np.stack(self.history)


def record_epoch(bank: PredictionBank, model: SoftmaxModel, features: np.ndarray) -> PredictionBank:
    """Append the current predictions, evicting the oldest beyond the window."""
    probs = predict_proba(model, features)
    bank.history.append(np.argmax(probs, axis=1))
    if len(bank.history) > bank.window:
        del bank.history[: len(bank.history) - bank.window]
    bank.latest_probs = probs
    return bank


def save_model(model: SoftmaxModel, path) -> None:
    """Flat binary checkpoint: magic, version, k, d (little-endian u32), then
    float64 weights row-major and the bias vector."""
    header = _CHECKPOINT_MAGIC + struct.pack(
        "<III", _CHECKPOINT_VERSION, model.num_classes, model.dim
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(model.weights, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())


def load_model(path, learning_rate: float = 0.1) -> SoftmaxModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _CHECKPOINT_MAGIC:
        raise ValueError("not a model checkpoint (bad magic)")
    version, k, d = struct.unpack("<III", blob[4:16])
    if version != _CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    need = 16 + 8 * (k * d + k)
    if len(blob) != need:
        raise ValueError(f"checkpoint truncated: expected {need} bytes, got {len(blob)}")
    weights = np.frombuffer(blob, dtype="<f8", count=k * d, offset=16).reshape(k, d)
    bias = np.frombuffer(blob, dtype="<f8", count=k, offset=16 + 8 * k * d)
    return SoftmaxModel(weights.copy(), bias.copy(), learning_rate)
