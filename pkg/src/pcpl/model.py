"""Trainable classifier: an MLP feature extractor plus a linear softmax head.

Gradients are hand-derived for the small, fixed layer vocabulary (identity,
relu, tanh, softplus); there is no autodiff framework underneath. The default
extractor is input -> 64 -> 32 with softplus activations; an empty layer list
makes the extractor the identity, which is how externally exported deep
features are consumed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

import numpy as np

from .core import LabeledDataset, ProportionSpec, ValidationError

__all__ = [
    "ACTIVATIONS",
    "TrainingError",
    "DenseLayer",
    "Classifier",
    "OptimizerState",
    "BatchPlan",
    "init_classifier",
    "clone_classifier",
    "parameters",
    "forward",
    "forward_batch",
    "backprop",
    "predict",
    "extract_features",
    "cross_entropy_loss",
    "proportion_loss",
    "adam_step",
    "balanced_sample",
    "balanced_batches",
]

LOG_CLAMP = 1e-8

# activation name -> (tag byte, fn, derivative-from-preactivation)
ACTIVATIONS = {
    "identity": 0,
    "relu": 1,
    "tanh": 2,
    "softplus": 3,
}
_TAG_TO_NAME = {v: k for k, v in ACTIVATIONS.items()}


class TrainingError(RuntimeError):
    """Raised when a training step produces non-finite losses or gradients."""


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "softplus":
        # log(1 + e^z) without overflow for large |z|
        return np.logaddexp(0.0, z)
    raise ValidationError(f"unknown activation {name!r}")


def _act_grad(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(z)
    if name == "relu":
        return (z > 0).astype(np.float64)
    if name == "tanh":
        return 1.0 - np.tanh(z) ** 2
    if name == "softplus":
        return 1.0 / (1.0 + np.exp(-z))
    raise ValidationError(f"unknown activation {name!r}")


def activation_tag(name: str) -> int:
    if name not in ACTIVATIONS:
        raise ValidationError(f"unknown activation {name!r}")
    return ACTIVATIONS[name]


def activation_name(tag: int) -> str:
    if tag not in _TAG_TO_NAME:
        raise ValidationError(f"unknown activation tag {tag}")
    return _TAG_TO_NAME[tag]


@dataclass
class DenseLayer:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "softplus"


@dataclass
class Classifier:
    """Extractor layers chained in order, then a linear softmax head."""

    layers: list[DenseLayer]
    head_w: np.ndarray  # (C, D)
    head_b: np.ndarray  # (C,)
    rng_seed: int = 0

    def __post_init__(self):
        prev = None
        for i, layer in enumerate(self.layers):
            if layer.w.ndim != 2 or layer.b.shape != (layer.w.shape[0],):
                raise ValidationError(f"layer {i} has inconsistent weight/bias shapes")
            if prev is not None and layer.w.shape[1] != prev:
                raise ValidationError(
                    f"layer {i} expects input dim {layer.w.shape[1]}, previous layer outputs {prev}"
                )
            if layer.activation not in ACTIVATIONS:
                raise ValidationError(f"layer {i} has unknown activation {layer.activation!r}")
            prev = layer.w.shape[0]
        if self.head_w.ndim != 2 or self.head_b.shape != (self.head_w.shape[0],):
            raise ValidationError("head has inconsistent weight/bias shapes")
        if prev is not None and self.head_w.shape[1] != prev:
            raise ValidationError(
                f"head expects input dim {self.head_w.shape[1]}, extractor outputs {prev}"
            )
        for arr in parameters(self):
            if not np.all(np.isfinite(arr)):
                raise ValidationError("classifier parameters contain non-finite values")

    @property
    def num_classes(self) -> int:
        return self.head_w.shape[0]

    @property
    def input_dim(self) -> int:
        return self.layers[0].w.shape[1] if self.layers else self.head_w.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.layers[-1].w.shape[0] if self.layers else self.head_w.shape[1]


def init_classifier(
    input_dim: int,
    num_classes: int,
    hidden: tuple[int, ...] = (64, 32),
    activation: str = "softplus",
    seed: int = 0,
) -> Classifier:
    """Fresh classifier with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights.

    ``hidden=()`` gives an identity extractor: features are the raw inputs
    and only the head is trainable.
    """
    if input_dim < 1 or num_classes < 1:
        raise ValidationError("input_dim and num_classes must be >= 1")
    if activation not in ACTIVATIONS:
        raise ValidationError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    layers = []
    fan_in = input_dim
    for width in hidden:
        bound = 1.0 / np.sqrt(fan_in)
        layers.append(
            DenseLayer(
                w=rng.uniform(-bound, bound, size=(width, fan_in)),
                b=np.zeros(width),
                activation=activation,
            )
        )
        fan_in = width
    bound = 1.0 / np.sqrt(fan_in)
    head_w = rng.uniform(-bound, bound, size=(num_classes, fan_in))
    head_b = np.zeros(num_classes)
    return Classifier(layers, head_w, head_b, rng_seed=seed)


def clone_classifier(model: Classifier) -> Classifier:
    return Classifier(
        [DenseLayer(l.w.copy(), l.b.copy(), l.activation) for l in model.layers],
        model.head_w.copy(),
        model.head_b.copy(),
        rng_seed=model.rng_seed,
    )


def parameters(model: Classifier) -> list[np.ndarray]:
    """All trainable arrays in declaration order (layer w, b, ..., head w, b)."""
    out = []
    for layer in model.layers:
        out.append(layer.w)
        out.append(layer.b)
    out.append(model.head_w)
    out.append(model.head_b)
    return out


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward_batch(model: Classifier, x: np.ndarray, want_cache: bool = False):
    """Batched forward pass: (features, probs) for a B x input_dim matrix.

    With ``want_cache`` also returns the per-layer pre-activations needed by
    backprop.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValidationError(
            f"input has shape {x.shape}, model expects (*, {model.input_dim})"
        )
    h = x
    cache = [] if want_cache else None
    for layer in model.layers:
        z = h @ layer.w.T + layer.b
        if want_cache:
            cache.append((h, z))
        h = _act(layer.activation, z)
    features = h
    logits = features @ model.head_w.T + model.head_b
    probs = _softmax(logits)
    if want_cache:
        return features, probs, cache
    return features, probs


def forward(model: Classifier, x: np.ndarray):
    """Single-sample forward pass: (feature vector, class probabilities)."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    features, probs = forward_batch(model, x)
    return features[0], probs[0]


def extract_features(model: Classifier, x: np.ndarray) -> np.ndarray:
    features, _ = forward_batch(model, x)
    return features


def predict(model: Classifier, x: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index."""
    _, probs = forward_batch(model, x)
    return np.argmax(probs, axis=1).astype(np.int64)


def backprop(model: Classifier, x: np.ndarray, dlogits: np.ndarray) -> list[np.ndarray]:
    """Gradients of a scalar loss wrt every parameter, given dloss/dlogits.

    Returns arrays aligned with ``parameters(model)``.
    """
    features, _, cache = forward_batch(model, x, want_cache=True)
    d_head_w = dlogits.T @ features
    d_head_b = dlogits.sum(axis=0)
    dh = dlogits @ model.head_w
    grads_layers = []
    for layer, (h_in, z) in zip(reversed(model.layers), reversed(cache)):
        dz = dh * _act_grad(layer.activation, z)
        grads_layers.append((dz.T @ h_in, dz.sum(axis=0)))
        dh = dz @ layer.w
    grads: list[np.ndarray] = []
    for dw, db in reversed(grads_layers):
        grads.append(dw)
        grads.append(db)
    grads.append(d_head_w)
    grads.append(d_head_b)
    return grads


def cross_entropy_loss(probs_batch: np.ndarray, labels_batch: np.ndarray):
    """Mean negative log-likelihood and its gradient wrt the logits.

    loss = -mean log p[label]; grad = (probs - onehot)/B.
    """
    probs = np.asarray(probs_batch, dtype=np.float64)
    labels = np.asarray(labels_batch, dtype=np.int64).reshape(-1)
    if probs.ndim != 2 or labels.shape[0] != probs.shape[0]:
        raise ValidationError("probs batch and labels have mismatched shapes")
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise ValidationError("label out of range for probability columns")
    b = probs.shape[0]
    picked = probs[np.arange(b), labels]
    loss = float(-np.log(np.maximum(picked, LOG_CLAMP)).mean())
    grad = probs.copy()
    grad[np.arange(b), labels] -= 1.0
    grad /= b
    return loss, grad


def proportion_loss(probs_batch: np.ndarray, p: ProportionSpec):
    """Cross-entropy between given proportions and the batch-mean prediction.

    p_hat is the column mean of the probabilities; loss is
    -sum_c p_c log(p_hat_c + eps) with the epsilon kept inside the gradient
    so finite differences match exactly. Equals H(p) when p_hat == p.
    """
    probs = np.asarray(probs_batch, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] < 1:
        raise ValidationError("probs batch must be non-empty and 2-dimensional")
    if probs.shape[1] != p.num_classes:
        raise ValidationError("probability columns do not match proportion classes")
    b = probs.shape[0]
    p_hat = probs.mean(axis=0)
    loss = float(-(p.p * np.log(p_hat + LOG_CLAMP)).sum())
    # dloss/dp_hat, then through the mean and each row's softmax jacobian
    g = -p.p / (p_hat + LOG_CLAMP)
    inner = probs @ g  # row-wise sum_c g_c * probs[i,c]
    grad = probs * (g[None, :] - inner[:, None]) / b
    return loss, grad


@dataclass
class OptimizerState:
    """Adam accumulators; moment shapes mirror the parameter list."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float) -> "OptimizerState":
        return cls(
            m=[np.zeros_like(a) for a in params],
            v=[np.zeros_like(a) for a in params],
            lr=lr,
        )


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: OptimizerState):
    """One bias-corrected Adam update, in place. Returns (params, state)."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValidationError("params, grads and optimizer state are misaligned")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params, state


@dataclass(frozen=True)
class BatchPlan:
    """How batches are drawn: size, balancing, source/target mix, seed."""

    batch_size: int = 64
    balanced: bool = True
    source_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if not 0.0 <= self.source_fraction <= 1.0:
            raise ValidationError("source_fraction must be in [0, 1]")


def balanced_sample(
    labels: np.ndarray, num_classes: int, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Class-balanced indices with replacement: uniform class, uniform member."""
    members = [np.where(labels == c)[0] for c in range(num_classes)]
    nonempty = [c for c in range(num_classes) if members[c].size]
    if not nonempty:
        raise ValidationError("cannot sample: all classes are empty")
    cls = rng.integers(0, len(nonempty), size=size)
    out = np.empty(size, dtype=np.int64)
    for i, ci in enumerate(cls):
        pool = members[nonempty[ci]]
        out[i] = pool[rng.integers(0, pool.size)]
    return out


def balanced_batches(ds: LabeledDataset, plan: BatchPlan) -> list[np.ndarray]:
    """One epoch of class-balanced index batches for ``ds``.

    ceil(N/batch_size) batches of exactly batch_size indices each, drawn
    with replacement (oversampling equalizes class frequencies), reproducible
    from the plan's seed.
    """
    rng = np.random.default_rng(plan.seed)
    n_batches = ceil(ds.n / plan.batch_size)
    if plan.balanced:
        return [
            balanced_sample(ds.labels, ds.num_classes, plan.batch_size, rng)
            for _ in range(n_batches)
        ]
    return [rng.integers(0, ds.n, size=plan.batch_size) for _ in range(n_batches)]
