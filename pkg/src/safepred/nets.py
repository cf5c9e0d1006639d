"""Small dense networks with explicit forward/backward passes and SGD.

Every learned component in the pipeline (predictors, forecasters, the
autoencoder, evaluators) is built from these nets. Losses: `ce` expects raw
logits and integer class targets (softmax is part of the loss), `bce` and
`mse` expect the network's output activations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

EPS = 1e-7  # probability clamp for log losses

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


class DivergenceError(Exception):
    """Training produced a non-finite loss."""


@dataclass
class Layer:
    weights: np.ndarray  # (in_dim, out_dim)
    bias: np.ndarray     # (out_dim,)
    activation: str


@dataclass
class DenseNet:
    layers: list[Layer]

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[1]

    def copy(self) -> "DenseNet":
        return DenseNet(
            [Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )


def make_net(dims: list[int], activations: list[str], seed: int) -> DenseNet:
    """Glorot-uniform initialized net: dims = [in, hidden..., out]."""
    if len(activations) != len(dims) - 1:
        raise ValueError("need one activation per layer")
    for a in activations:
        if a not in ACTIVATIONS:
            raise ValueError(f"unknown activation {a!r}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        layers.append(
            Layer(
                weights=rng.uniform(-limit, limit, size=(fan_in, fan_out)),
                bias=np.zeros(fan_out),
                activation=act,
            )
        )
    return DenseNet(layers)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


def forward_cached(net: DenseNet, x: np.ndarray):
    """Batch forward pass keeping intermediates for backprop.

    Returns (activations, preactivations); activations[0] is the input and
    activations[-1] the output.
    """
    acts = [x]
    zs = []
    a = x
    for layer in net.layers:
        z = a @ layer.weights + layer.bias
        a = _activate(z, layer.activation)
        zs.append(z)
        acts.append(a)
    return acts, zs


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        if x.shape[0] != net.input_dim:
            raise ValueError(f"input length {x.shape[0]} != {net.input_dim}")
        x = x[None, :]
    elif x.shape[1] != net.input_dim:
        raise ValueError(f"input width {x.shape[1]} != {net.input_dim}")
    out = forward_cached(net, x)[0][-1]
    return out[0] if single else out


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _as_batch(pred, target):
    pred = np.asarray(pred, dtype=float)
    if pred.ndim == 1:
        pred = pred[None, :]
        target = np.asarray(target)[None] if np.ndim(target) == 0 else np.asarray(target)[None, :]
    return pred, np.asarray(target)


def loss(kind: str, prediction, target) -> float:
    """Scalar training loss, mean over elements (mse/bce) or batch rows (ce)."""
    pred, tgt = _as_batch(prediction, target)
    if kind == "mse":
        return float(np.mean((pred - tgt.astype(float)) ** 2))
    if kind == "bce":
        p = np.clip(pred, EPS, 1.0 - EPS)
        t = tgt.astype(float)
        return float(np.mean(-t * np.log(p) - (1.0 - t) * np.log(1.0 - p)))
    if kind == "ce":
        p = softmax(pred)
        idx = tgt.astype(int).reshape(-1)
        picked = np.clip(p[np.arange(len(idx)), idx], EPS, 1.0)
        return float(np.mean(-np.log(picked)))
    raise ValueError(f"unknown loss kind {kind!r}")


def loss_grad(kind: str, prediction: np.ndarray, target) -> np.ndarray:
    """Gradient of `loss` w.r.t. the network output (batch form)."""
    pred = np.asarray(prediction, dtype=float)
    tgt = np.asarray(target)
    if kind == "mse":
        return 2.0 * (pred - tgt.astype(float)) / pred.size
    if kind == "bce":
        inside = (pred > EPS) & (pred < 1.0 - EPS)
        p = np.clip(pred, EPS, 1.0 - EPS)
        t = tgt.astype(float)
        g = (-t / p + (1.0 - t) / (1.0 - p)) / pred.size
        return g * inside
    if kind == "ce":
        p = softmax(pred)
        idx = tgt.astype(int).reshape(-1)
        onehot = np.zeros_like(p)
        onehot[np.arange(len(idx)), idx] = 1.0
        return (p - onehot) / pred.shape[0]
    raise ValueError(f"unknown loss kind {kind!r}")


def backprop(net: DenseNet, acts, zs, grad_out: np.ndarray):
    """Chain an output-activation gradient back through the net.

    Returns ([(dW, db) per layer], gradient w.r.t. the input batch).
    """
    grads = [None] * len(net.layers)
    delta = grad_out
    for li in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[li]
        delta = delta * _activation_grad(zs[li], acts[li + 1], layer.activation)
        grads[li] = (acts[li].T @ delta, delta.sum(axis=0))
        delta = delta @ layer.weights.T
    return grads, delta


def backward(net: DenseNet, x: np.ndarray, target, loss_kind: str):
    """Exact analytic parameter gradients of the loss at (x, target)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
        target = np.asarray(target)[None] if np.ndim(target) == 0 else np.asarray(target)[None, :]
    if x.shape[1] != net.input_dim:
        raise ValueError(f"input width {x.shape[1]} != {net.input_dim}")
    acts, zs = forward_cached(net, x)
    grad_out = loss_grad(loss_kind, acts[-1], target)
    grads, _ = backprop(net, acts, zs, grad_out)
    return grads


def apply_gradients(net: DenseNet, grads, lr: float) -> None:
    for layer, (dw, db) in zip(net.layers, grads):
        layer.weights -= lr * dw
        layer.bias -= lr * db


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128
    max_epochs: int = 100
    lr_reduction_factor: float = 0.1
    patience_epochs: int = 5
    early_stop_patience: int = 15
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.patience_epochs < 1 or self.early_stop_patience < 1:
            raise ValueError("patiences must be >= 1")


def _pairs_to_arrays(pairs):
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        return pairs
    xs, ys = zip(*pairs)
    return np.stack([np.asarray(x, dtype=float) for x in xs]), np.asarray(ys)


def sgd_train(net: DenseNet, pairs, cfg: TrainConfig, loss_kind: str = "ce"):
    """Minibatch SGD with plateau LR reduction and early stopping.

    Returns (trained net, per-epoch loss history). The input net is not
    modified. Deterministic given cfg.seed.
    """
    X, Y = _pairs_to_arrays(pairs)
    if len(X) == 0:
        raise ValueError("empty training set")
    net = net.copy()
    rng = np.random.default_rng(cfg.seed)
    lr = cfg.learning_rate
    best = np.inf
    since_improve = 0
    history = []

    for _ in range(cfg.max_epochs):
        perm = rng.permutation(len(X))
        total = 0.0
        for start in range(0, len(X), cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            xb, yb = X[idx], Y[idx]
            acts, zs = forward_cached(net, xb)
            total += loss(loss_kind, acts[-1], yb) * len(idx)
            grads, _ = backprop(net, acts, zs, loss_grad(loss_kind, acts[-1], yb))
            apply_gradients(net, grads, lr)
        epoch_loss = total / len(X)
        if not np.isfinite(epoch_loss):
            raise DivergenceError(f"non-finite epoch loss {epoch_loss}")
        history.append(epoch_loss)

        if epoch_loss < best:
            best = epoch_loss
            since_improve = 0
        else:
            since_improve += 1
            if since_improve % cfg.patience_epochs == 0:
                lr *= cfg.lr_reduction_factor
            if since_improve >= cfg.early_stop_patience:
                break
    return net, history


def save_net(net: DenseNet, path) -> None:
    with open(path, "w") as fh:
        json.dump(net_to_dict(net), fh, sort_keys=True, separators=(",", ":"))


def net_to_dict(net: DenseNet) -> dict:
    return {
        "version": 1,
        "layers": [
            {
                "activation": l.activation,
                "in_dim": int(l.weights.shape[0]),
                "out_dim": int(l.weights.shape[1]),
                "weights": l.weights.ravel().tolist(),
                "bias": l.bias.tolist(),
            }
            for l in net.layers
        ],
    }


def net_from_dict(d: dict) -> DenseNet:
    if d.get("version") != 1:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    layers = []
    for spec in d["layers"]:
        w = np.array(spec["weights"]).reshape(spec["in_dim"], spec["out_dim"])
        layers.append(Layer(w, np.array(spec["bias"]), spec["activation"]))
    return DenseNet(layers)


def load_net(path) -> DenseNet:
    with open(path) as fh:
        return net_from_dict(json.load(fh))
