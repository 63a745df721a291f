"""From-scratch dense MLP: forward pass, reverse-mode gradients, AdamW, training loop.

Everything is float64 numpy. The gradient path is hand-derived and is checked
against central finite differences in the test suite, so no autodiff library
is involved anywhere.
"""

from __future__ import annotations

import copy
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SCHEMA_VERSION = 1
ROLES = ("main", "trojan", "generic")
ACTIVATIONS = ("silu", "relu", "none")
STD_FLOOR = 1e-8


# ---------------------------------------------------------------- activations

def _sigmoid(z: np.ndarray) -> np.ndarray:
    # stable for large |z|: exponent argument is always <= 0
    e = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def activation_apply(name: str, z: np.ndarray) -> np.ndarray:
    if name == "silu":
        return z * _sigmoid(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "none":
        return z
    raise ValueError(f"unknown activation {name!r}")


def activation_grad(name: str, z: np.ndarray) -> np.ndarray:
    """Derivative with respect to the pre-activation z."""
    if name == "silu":
        s = _sigmoid(z)
        return s * (1.0 + z * (1.0 - s))
    if name == "relu":
        # subgradient 0 at z == 0
        return (z > 0.0).astype(z.dtype)
    if name == "none":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


# ---------------------------------------------------------------------- types

@dataclass
class DenseLayer:
    """Fully connected layer: weights (out_dim, in_dim), biases (out_dim,)."""

    weights: np.ndarray
    biases: np.ndarray
    activation: str

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class Normalizer:
    """Per-feature z-score transform fitted on training inputs."""

    mean: np.ndarray
    std: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std


def identity_normalizer(dim: int) -> Normalizer:
    return Normalizer(np.zeros(dim), np.ones(dim))


def fit_normalizer(x: np.ndarray, floor: float = STD_FLOOR) -> Normalizer:
    """Population mean/std per feature; std is floored to keep the transform finite."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("need a nonempty (n, d) array to fit a normalizer")
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), floor)
    return Normalizer(mean, std)


@dataclass
class MlpModel:
    """A stack of dense layers plus the input normalizer it was trained with."""

    layers: list[DenseLayer]
    normalizer: Normalizer
    role: str = "generic"
    metadata: dict = field(default_factory=dict)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def validate(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.layers:
            raise ValueError("model has no layers")
        for i, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"layer {i}: unknown activation {layer.activation!r}")
            if layer.weights.shape != (layer.out_dim, layer.in_dim):
                raise ValueError(f"layer {i}: weight shape mismatch")
            if layer.biases.shape != (layer.out_dim,):
                raise ValueError(f"layer {i}: bias shape mismatch")
            if not (np.isfinite(layer.weights).all() and np.isfinite(layer.biases).all()):
                raise ValueError(f"layer {i}: non-finite parameters")
            if i > 0 and layer.in_dim != self.layers[i - 1].out_dim:
                raise ValueError(f"layer {i}: in_dim does not chain from previous layer")
        if self.normalizer.mean.shape != (self.in_dim,) or self.normalizer.std.shape != (self.in_dim,):
            raise ValueError("normalizer dimension does not match first layer")
        if not (self.normalizer.std > 0).all():
            raise ValueError("normalizer std must be positive")
        if self.role == "main" and (self.in_dim != 5 or self.out_dim != 2):
            raise ValueError("main model must map 5 inputs to 2 outputs")
        if self.role == "trojan" and (self.in_dim != 5 or self.out_dim != 1):
            raise ValueError("trojan model must map 5 inputs to 1 output")


MAIN_DIMS = (5, 128, 256, 256, 2)
MAIN_ACTIVATIONS = ("silu", "silu", "silu", "none")
TROJAN_DIMS = (5, 64, 64, 1)
TROJAN_ACTIVATIONS = ("relu", "relu", "none")


def init_model(
    dims: tuple[int, ...],
    activations: tuple[str, ...],
    seed: int,
    role: str = "generic",
    normalizer: Normalizer | None = None,
) -> MlpModel:
    """Seeded init: weights and biases uniform in +-sqrt(1/in_dim)."""
    if len(activations) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    rng = np.random.default_rng(seed)
    layers = []
    for d_in, d_out, act in zip(dims, dims[1:], activations):
        bound = math.sqrt(1.0 / d_in)
        layers.append(DenseLayer(
            weights=rng.uniform(-bound, bound, size=(d_out, d_in)),
            biases=rng.uniform(-bound, bound, size=d_out),
            activation=act,
        ))
    model = MlpModel(layers, normalizer or identity_normalizer(dims[0]), role=role)
    model.validate()
    return model


# -------------------------------------------------------------------- forward

def _forward_layers(layers: list[DenseLayer], a: np.ndarray, keep: bool = False):
    """Run pre-normalized activations through the stack.

    With keep=True also returns per-layer inputs, pre-activations, and the
    sigmoid values of silu layers so the backward pass never re-exponentiates.
    """
    inputs, preacts, sigmoids = [], [], []
    for layer in layers:
        z = a @ layer.weights.T + layer.biases
        if layer.activation == "silu":
            s = _sigmoid(z)
            out = z * s
        else:
            s = None
            out = activation_apply(layer.activation, z)
        if keep:
            inputs.append(a)
            preacts.append(z)
            sigmoids.append(s)
        a = out
    return (a, inputs, preacts, sigmoids) if keep else a


def forward(model: MlpModel, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of rows."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != model.in_dim:
        raise ValueError(f"expected input dimension {model.in_dim}, got shape {x.shape}")
    if not np.isfinite(batch).all():
        raise ValueError("non-finite input")
    out = _forward_layers(model.layers, model.normalizer.apply(batch))
    return out[0] if single else out


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean of squared componentwise differences over every element."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError("prediction and target shapes differ")
    if pred.size == 0:
        raise ValueError("empty prediction")
    diff = pred - target
    return float(np.mean(diff * diff))


# ------------------------------------------------------------------- backward

def _backward_layers(layers, x_norm, y):
    """Gradients of the batch-mean MSE for pre-normalized inputs."""
    a, inputs, preacts, sigmoids = _forward_layers(layers, x_norm, keep=True)
    n = y.shape[0]
    loss = float(np.mean((a - y) ** 2))
    # d(loss)/d(a_last): mean over n*out_dim elements
    delta = (2.0 / (n * y.shape[1])) * (a - y)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        if layers[i].activation == "silu":
            s = sigmoids[i]
            delta = delta * (s * (1.0 + preacts[i] * (1.0 - s)))
        else:
            delta = delta * activation_grad(layers[i].activation, preacts[i])
        grads[i] = (delta.T @ inputs[i], delta.sum(axis=0))
        if i > 0:
            delta = delta @ layers[i].weights
    return grads, loss


def backward(model: MlpModel, x: np.ndarray, y: np.ndarray):
    """Return ([(dW, db) per layer], batch loss) for inputs x and targets y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if y.ndim == 1:
        y = y[None, :]
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError("x and y must hold the same positive number of rows")
    if y.shape[1] != model.out_dim:
        raise ValueError(f"expected target dimension {model.out_dim}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("non-finite input")
    return _backward_layers(model.layers, model.normalizer.apply(x), y)


# ---------------------------------------------------------------------- AdamW

@dataclass
class AdamWState:
    """Decoupled weight decay Adam: moment buffers per parameter tensor."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def init_adamw(model: MlpModel, lr: float, **kwargs) -> AdamWState:
    state = AdamWState(lr=lr, **kwargs)
    if not state.lr > 0:
        raise ValueError("lr must be positive")
    for layer in model.layers:
        state.m.append((np.zeros_like(layer.weights), np.zeros_like(layer.biases)))
        state.v.append((np.zeros_like(layer.weights), np.zeros_like(layer.biases)))
    return state


def adamw_step(model: MlpModel, grads, state: AdamWState) -> None:
    """One optimizer step; updates the model parameters in place.

    theta <- theta - lr * (mhat / (sqrt(vhat) + eps) + weight_decay * theta)
    """
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for layer, (gw, gb), mom, sec in zip(model.layers, grads, state.m, state.v):
        for p, g, m, v in ((layer.weights, gw, mom[0], sec[0]),
                           (layer.biases, gb, mom[1], sec[1])):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            mhat = m / bc1
            vhat = v / bc2
            p -= state.lr * (mhat / (np.sqrt(vhat) + state.eps) + state.weight_decay * p)


# ------------------------------------------------------------------- training

@dataclass
class TrainConfig:
    epochs: int
    lr: float
    batch_size: int = 512
    seed: int = 0
    val_fraction: float = 0.0
    select_best_val: bool = False
    weight_decay: float = 0.01
    lr_final: float | None = None  # cosine-decay target; None keeps lr constant
    # ranks best-val snapshots; gets (predictions, targets, raw features),
    # lower is better. None ranks by validation MSE.
    val_score: Callable[[np.ndarray, np.ndarray, np.ndarray], float] | None = None

    def validate(self) -> None:
        if self.epochs <= 0:
            raise ValueError("epochs must be positive")
        if self.batch_size <= 0:
            raise ValueError("batch_size must be positive")
        if not self.lr > 0:
            raise ValueError("lr must be positive")
        if self.lr_final is not None and not 0.0 < self.lr_final <= self.lr:
            raise ValueError("lr_final must be in (0, lr]")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")
        if self.select_best_val and self.val_fraction == 0.0:
            raise ValueError("best-val selection needs a validation split")

    def lr_at(self, epoch: int) -> float:
        if self.lr_final is None or self.epochs == 1:
            return self.lr
        frac = epoch / (self.epochs - 1)
        return self.lr_final + 0.5 * (self.lr - self.lr_final) * (1.0 + math.cos(math.pi * frac))


@dataclass
class TrainResult:
    model: MlpModel
    history: list  # one dict per epoch: train_loss, val_loss (None without split)
    best_epoch: int | None = None


def train(model: MlpModel, x: np.ndarray, y: np.ndarray, config: TrainConfig,
          log_every: int = 0, log: Callable[[str], None] = print) -> TrainResult:
    """Minibatch AdamW training; deterministic for a fixed config and data.

    Shuffling, the optional validation split, and parameter updates all draw
    from one seeded generator, so reruns are bit-identical. With
    select_best_val the parameters snapshot with the lowest validation loss
    are restored at the end.
    """
    config.validate()
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError("x and y must be nonempty 2-D arrays with matching rows")
    rng = np.random.default_rng(config.seed)
    x_norm = model.normalizer.apply(x)

    n = x.shape[0]
    if config.val_fraction > 0.0:
        n_val = max(1, int(round(config.val_fraction * n)))
        if n_val >= n:
            raise ValueError("validation split leaves no training data")
        perm = rng.permutation(n)
        val_idx, tr_idx = perm[:n_val], perm[n_val:]
        x_val, y_val = x_norm[val_idx], y[val_idx]
        x_val_raw = x[val_idx]
        x_tr, y_tr = x_norm[tr_idx], y[tr_idx]
    else:
        x_val = y_val = x_val_raw = None
        x_tr, y_tr = x_norm, y

    state = init_adamw(model, lr=config.lr, weight_decay=config.weight_decay)
    history = []
    best_val = math.inf
    best_epoch = None
    best_params = None
    n_tr = x_tr.shape[0]
    for epoch in range(config.epochs):
        state.lr = config.lr_at(epoch)
        order = rng.permutation(n_tr)
        total = 0.0
        for start in range(0, n_tr, config.batch_size):
            idx = order[start:start + config.batch_size]
            grads, loss = _backward_layers(model.layers, x_tr[idx], y_tr[idx])
            adamw_step(model, grads, state)
            total += loss * idx.shape[0]
        train_loss = total / n_tr
        val_loss = None
        if x_val is not None:
            pred = _forward_layers(model.layers, x_val)
            val_loss = float(np.mean((pred - y_val) ** 2))
            score = (config.val_score(pred, y_val, x_val_raw)
                     if config.val_score is not None else val_loss)
            if config.select_best_val and score < best_val:
                best_val = score
                best_epoch = epoch
                best_params = [(layer.weights.copy(), layer.biases.copy())
                               for layer in model.layers]
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if log_every and (epoch % log_every == 0 or epoch == config.epochs - 1):
            msg = f"epoch {epoch:4d}  train {train_loss:.6g}"
            if val_loss is not None:
                msg += f"  val {val_loss:.6g}"
            log(msg)
    if config.select_best_val and best_params is not None:
        for layer, (w, b) in zip(model.layers, best_params):
            layer.weights, layer.biases = w, b
    return TrainResult(model=model, history=history, best_epoch=best_epoch)


# ---------------------------------------------------------------- persistence

def _model_payload(model: MlpModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "role": model.role,
        "layers": [
            {
                "in_dim": layer.in_dim,
                "out_dim": layer.out_dim,
                "activation": layer.activation,
                "weights": [[float(w) for w in row] for row in layer.weights],
                "biases": [float(b) for b in layer.biases],
            }
            for layer in model.layers
        ],
        "normalizer": {
            "mean": [float(v) for v in model.normalizer.mean],
            "std": [float(v) for v in model.normalizer.std],
        },
        "metadata": model.metadata,
    }


def save_model(model: MlpModel, path: str | os.PathLike) -> None:
    """Write the model as JSON; floats keep full round-trip precision."""
    model.validate()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_model_payload(model), fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_model(path: str | os.PathLike) -> MlpModel:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or raw.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema in {path}")
    layers = []
    for i, spec in enumerate(raw["layers"]):
        w = np.array(spec["weights"], dtype=np.float64)
        b = np.array(spec["biases"], dtype=np.float64)
        if w.ndim != 2 or w.shape != (spec["out_dim"], spec["in_dim"]) or b.shape != (spec["out_dim"],):
            raise ValueError(f"layer {i}: stored dimensions are inconsistent")
        layers.append(DenseLayer(weights=w, biases=b, activation=spec["activation"]))
    norm = Normalizer(
        mean=np.array(raw["normalizer"]["mean"], dtype=np.float64),
        std=np.array(raw["normalizer"]["std"], dtype=np.float64),
    )
    model = MlpModel(layers, norm, role=raw["role"], metadata=raw.get("metadata", {}))
    model.validate()
    return model


def clone_model(model: MlpModel) -> MlpModel:
    return MlpModel(
        layers=[DenseLayer(l.weights.copy(), l.biases.copy(), l.activation) for l in model.layers],
        normalizer=Normalizer(model.normalizer.mean.copy(), model.normalizer.std.copy()),
        role=model.role,
        metadata=copy.deepcopy(model.metadata),
    )
