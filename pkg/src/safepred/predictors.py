"""Safety label predictors: monolithic, composite image, composite latent.

Composites split prediction into a forecaster (image- or latent-space,
one-step, rolled out iteratively) and an evaluator that judges the forecast.
Forecast images are distribution-shifted relative to real renders, so two
shift-hardened evaluators exist: one trained under augmentation and one
built on robust geometric features of the rendered scene.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import nets
from .data import Dataset, ForecastSample
from .nets import DenseNet, TrainConfig
from .sim import (
    CART_BOTTOM_ROW,
    CART_TOP_ROW,
    IMG_H,
    IMG_W,
    POLE_PIVOT_ROW,
    SAFE_ANGLE,
)

TAN_SAFE = math.tan(SAFE_ANGLE)
DARK_THRESHOLD = 0.5
LOG_VAR_LIMIT = 6.0  # encoder log-variance clamp; keeps exp() finite early on


# ---------------------------------------------------------------------------
# window/image plumbing


def _flat_image(img: np.ndarray) -> np.ndarray:
    return np.asarray(img, dtype=float).ravel()


def flatten_window(window, actions=None) -> np.ndarray:
    """Stack m frames (and optionally m actions as +-1 reals) into one vector."""
    parts = [_flat_image(f) for f in window]
    if actions is not None:
        parts.append(np.asarray(actions, dtype=float))
    return np.concatenate(parts)


def dataset_matrix(ds: Dataset, with_actions: bool) -> np.ndarray:
    return np.stack(
        [flatten_window(s.window, s.actions if with_actions else None) for s in ds.samples]
    )


def images_matrix(images) -> np.ndarray:
    return np.stack([_flat_image(img) for img in images])


# ---------------------------------------------------------------------------
# evaluators


def _gaussian_blur3(img: np.ndarray, sigma: float = 0.8) -> np.ndarray:
    g = np.exp(-np.arange(-1, 2) ** 2 / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    kernel /= kernel.sum()
    padded = np.pad(img, 1, mode="edge")
    out = np.zeros_like(img)
    for dr in range(3):
        for dc in range(3):
            out += kernel[dr, dc] * padded[dr : dr + img.shape[0], dc : dc + img.shape[1]]
    return out


def augment_image(img: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Brightness shift (always), inversion (p=0.5), 3x3 blur (p=0.5)."""
    out = np.clip(img + rng.uniform(-0.2, 0.2), 0.0, 1.0)
    if rng.random() < 0.5:
        out = 1.0 - out
    if rng.random() < 0.5:
        out = _gaussian_blur3(out)
    return out


def robust_pole_slope(img: np.ndarray) -> float | None:
    """Horizontal-per-vertical slope of the pole, from dark-pixel centroids.

    Inverted images (global median below 0.5) are flipped first. The cart
    rows give the pivot column; each pole row contributes its
    darkness-weighted column centroid, and a least-squares line through the
    pivot recovers the slope. None when no cart or no pole pixels are found.
    """
    img = np.asarray(img, dtype=float).reshape(IMG_H, IMG_W)
    if np.median(img) < 0.5:
        img = 1.0 - img
    dark = np.where(img < DARK_THRESHOLD, 1.0 - img, 0.0)
    cols = np.arange(IMG_W)

    cart = dark[CART_TOP_ROW : CART_BOTTOM_ROW + 1]
    cart_weight = cart.sum()
    if cart_weight <= 0.0:
        return None
    pivot = float((cart.sum(axis=0) * cols).sum() / cart_weight)

    num = 0.0
    den = 0.0
    for row in range(CART_TOP_ROW):
        w = dark[row]
        total = w.sum()
        if total <= 0.0:
            continue
        offset = float((w * cols).sum() / total) - pivot
        dist = POLE_PIVOT_ROW - row
        num += dist * offset
        den += dist * dist
    if den == 0.0:
        return None
    return num / den


def robust_evaluate(img: np.ndarray) -> int:
    """Geometric safety judgment; conservative 0 when the scene is unreadable."""
    slope = robust_pole_slope(img)
    if slope is None:
        return 0
    return 1 if abs(slope) <= TAN_SAFE else 0


@dataclass
class Evaluator:
    kind: str  # learned | robust_feature
    net: DenseNet | None = None
    augmentation: bool = False

    def __post_init__(self):
        if self.kind == "learned" and self.net is None:
            raise ValueError("learned evaluator needs a net")
        if self.kind not in ("learned", "robust_feature"):
            raise ValueError(f"unknown evaluator kind {self.kind!r}")

    def scores(self, images: np.ndarray) -> np.ndarray:
        """Safe-probability per image; robust features yield hard 0/1 scores."""
        images = np.atleast_2d(images)
        if self.kind == "learned":
            return nets.softmax(nets.forward(self.net, images))[:, 1]
        return np.array([float(robust_evaluate(img)) for img in images])

    def labels(self, images: np.ndarray) -> np.ndarray:
        return (self.scores(images) > 0.5).astype(int)


def train_evaluator(
    images,
    labels,
    augment: bool,
    cfg: TrainConfig,
    hidden: tuple[int, ...] = (32,),
) -> tuple[Evaluator, list[float]]:
    """CE-trained single-frame safety classifier, optionally on augmented inputs."""
    X = images_matrix(images)
    y = np.asarray(labels, dtype=int)
    if augment:
        rng = np.random.default_rng([cfg.seed, 0xA06])
        X = np.stack([augment_image(x.reshape(IMG_H, IMG_W), rng).ravel() for x in X])
    dims = [X.shape[1], *hidden, 2]
    acts = ["relu"] * len(hidden) + ["identity"]
    net = nets.make_net(dims, acts, seed=cfg.seed)
    net, history = nets.sgd_train(net, (X, y), cfg, "ce")
    return Evaluator(kind="learned", net=net, augmentation=augment), history


# ---------------------------------------------------------------------------
# monolithic predictor


@dataclass
class MonolithicPredictor:
    net: DenseNet
    m: int
    k: int
    controller_specific: bool


def train_monolithic(
    train_ds: Dataset,
    cfg: TrainConfig,
    hidden: tuple[int, ...] = (32,),
) -> tuple[MonolithicPredictor, list[float]]:
    """Binary CE classifier over flattened windows (actions appended when
    the dataset is controller-independent)."""
    if len(train_ds) == 0:
        raise ValueError("empty training dataset")
    controller_specific = train_ds.kind == "obs_controller"
    X = dataset_matrix(train_ds, with_actions=not controller_specific)
    y = train_ds.labels()
    dims = [X.shape[1], *hidden, 2]
    acts = ["relu"] * len(hidden) + ["identity"]
    net = nets.make_net(dims, acts, seed=cfg.seed)
    net, history = nets.sgd_train(net, (X, y), cfg, "ce")
    return (
        MonolithicPredictor(
            net=net, m=train_ds.m, k=train_ds.k, controller_specific=controller_specific
        ),
        history,
    )


# ---------------------------------------------------------------------------
# forecasters


@dataclass
class ImageForecaster:
    net: DenseNet  # m*H*W (+ m actions) -> H*W, sigmoid output
    m: int
    with_actions: bool
    calls: int = field(default=0, compare=False)

    def forecast(self, windows: np.ndarray) -> np.ndarray:
        """One-step forecast for a batch of flattened windows (one application)."""
        self.calls += 1
        return nets.forward(self.net, np.atleast_2d(windows))


def train_image_forecaster(
    pairs: list[ForecastSample],
    cfg: TrainConfig,
    hidden: tuple[int, ...] = (48,),
) -> tuple[ImageForecaster, list[float]]:
    """One-step image forecaster, BCE on pixels against the true next frame.

    The per-pixel BCE gradient shrinks with the pixel count, so the step
    size is scaled by the output width to keep updates comparable to the
    classifier losses at the same configured learning rate.
    """
    if not pairs:
        raise ValueError("no forecast pairs")
    with_actions = pairs[0].actions is not None
    m = len(pairs[0].window)
    X = np.stack([flatten_window(p.window, p.actions) for p in pairs])
    Y = np.stack([_flat_image(p.target) for p in pairs])
    dims = [X.shape[1], *hidden, Y.shape[1]]
    acts = ["relu"] * len(hidden) + ["sigmoid"]
    net = nets.make_net(dims, acts, seed=cfg.seed)
    # Start from the mean frame so training spends its budget on motion,
    # not on rediscovering the static background.
    mean_frame = np.clip(Y.mean(axis=0), 1e-3, 1.0 - 1e-3)
    net.layers[-1].bias = np.log(mean_frame) - np.log(1.0 - mean_frame)
    scaled = replace(cfg, learning_rate=cfg.learning_rate * Y.shape[1])
    net, history = nets.sgd_train(net, (X, Y), scaled, "bce")
    return ImageForecaster(net=net, m=m, with_actions=with_actions), history


# ---------------------------------------------------------------------------
# safety-regularized autoencoder


@dataclass
class SafetyAutoencoder:
    encoder: DenseNet  # pixels -> [mean, log-variance]
    decoder: DenseNet  # latent -> pixels, sigmoid output
    latent_dim: int
    lambda_latent: float
    lambda_safety: float

    def encode(self, images: np.ndarray) -> np.ndarray:
        """Latent means (the inference-time representation)."""
        out = nets.forward(self.encoder, np.atleast_2d(images))
        return out[:, : self.latent_dim]

    def decode(self, latents: np.ndarray) -> np.ndarray:
        return nets.forward(self.decoder, np.atleast_2d(latents))

    def reconstruct(self, images: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(images))

    def reconstruction_mse(self, images) -> float:
        """Per-pixel mean squared reconstruction error."""
        X = images_matrix(images)
        return float(np.mean((self.reconstruct(X) - X) ** 2))


def kl_standard_normal(mean: np.ndarray, log_var: np.ndarray) -> float:
    """Mean over batch of KL(N(mean, e^log_var) || N(0, I))."""
    mean = np.atleast_2d(mean)
    log_var = np.atleast_2d(log_var)
    per_sample = -0.5 * np.sum(1.0 + log_var - mean**2 - np.exp(log_var), axis=1)
    return float(per_sample.mean())


def train_autoencoder(
    images,
    labels,
    evaluator: Evaluator | None,
    cfg: TrainConfig,
    latent_dim: int = 8,
    lambda_latent: float = 1.0,
    lambda_safety: float | None = None,
    hidden: int = 64,
    safety_warmup_epochs: int = 0,
) -> tuple[SafetyAutoencoder, list[float]]:
    """Variational autoencoder with an optional safety term.

    Total loss per sample (averaged over the batch): squared reconstruction
    error summed over pixels + lambda_latent * KL to a standard normal +
    lambda_safety * CE of the (frozen, pretrained) evaluator on the
    reconstruction against the true label. lambda_safety defaults to the
    image pixel count; pass 0 to disable the safety term (the evaluator may
    then be None). Sampling noise is seeded; inference uses latent means.

    The safety gradient is uninformative until reconstructions resemble real
    frames, and at full weight it dominates the reconstruction gradient by
    roughly the pixel count over the batch size, so switching it on at the
    training step size knocks the decoder off a good solution.
    safety_warmup_epochs > 0 therefore trains reconstruction-only for that
    many epochs, then enables the safety weight at a strongly reduced step
    size. The returned model is the best full-loss snapshot over the whole
    run, and the reported history always scores the full-weight loss.
    """
    X = images_matrix(images)
    y = np.asarray(labels, dtype=int)
    n, dim = X.shape
    if lambda_safety is None:
        lambda_safety = float(dim)
    if lambda_latent < 0 or lambda_safety < 0:
        raise ValueError("regularization weights must be >= 0")
    if lambda_safety > 0 and (evaluator is None or evaluator.kind != "learned"):
        raise ValueError("safety loss needs a pretrained learned evaluator")

    enc = nets.make_net(
        [dim, hidden, 2 * latent_dim], ["relu", "identity"], seed=cfg.seed
    )
    dec = nets.make_net(
        [latent_dim, hidden, dim], ["relu", "sigmoid"], seed=cfg.seed + 1
    )

    rng = np.random.default_rng(cfg.seed)
    lr = cfg.learning_rate
    best = np.inf
    best_nets = (enc.copy(), dec.copy())
    active_best = np.inf  # plateau reference within the full-weight phase
    since_improve = 0
    history: list[float] = []

    for epoch in range(cfg.max_epochs):
        w_safety = 0.0 if epoch < safety_warmup_epochs else lambda_safety
        if epoch == safety_warmup_epochs and epoch > 0:
            lr *= cfg.lr_reduction_factor**2
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            xb, yb = X[idx], y[idx]
            B = len(idx)

            acts_e, zs_e = nets.forward_cached(enc, xb)
            mean = acts_e[-1][:, :latent_dim]
            raw_log_var = acts_e[-1][:, latent_dim:]
            log_var = np.clip(raw_log_var, -LOG_VAR_LIMIT, LOG_VAR_LIMIT)
            lv_inside = (np.abs(raw_log_var) < LOG_VAR_LIMIT).astype(float)
            eps = rng.standard_normal((B, latent_dim))
            z = mean + np.exp(0.5 * log_var) * eps
            acts_d, zs_d = nets.forward_cached(dec, z)
            recon = acts_d[-1]

            batch_loss = float(np.mean(np.sum((recon - xb) ** 2, axis=1)))
            grad_recon = 2.0 * (recon - xb) / B
            if lambda_latent > 0:
                batch_loss += lambda_latent * kl_standard_normal(mean, log_var)
            if lambda_safety > 0:
                acts_v, zs_v = nets.forward_cached(evaluator.net, recon)
                batch_loss += lambda_safety * nets.loss("ce", acts_v[-1], yb)
                g_eval = nets.loss_grad("ce", acts_v[-1], yb)
                _, g_recon_safety = nets.backprop(evaluator.net, acts_v, zs_v, g_eval)
                grad_recon = grad_recon + w_safety * g_recon_safety

            grads_dec, g_z = nets.backprop(dec, acts_d, zs_d, grad_recon)
            g_mean = g_z.copy()
            g_log_var = g_z * eps * 0.5 * np.exp(0.5 * log_var)
            if lambda_latent > 0:
                g_mean += lambda_latent * mean / B
                g_log_var += lambda_latent * (-0.5) * (1.0 - np.exp(log_var)) / B
            g_log_var *= lv_inside
            grads_enc, _ = nets.backprop(
                enc, acts_e, zs_e, np.concatenate([g_mean, g_log_var], axis=1)
            )
            nets.apply_gradients(dec, grads_dec, lr)
            nets.apply_gradients(enc, grads_enc, lr)
            total += batch_loss * B

        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise nets.DivergenceError(f"non-finite autoencoder loss {epoch_loss}")
        history.append(epoch_loss)
        if epoch_loss < best:
            best = epoch_loss
            best_nets = (enc.copy(), dec.copy())
        # plateau/stop bookkeeping runs only while the safety weight is active,
        # against the active phase's own minimum
        if epoch >= safety_warmup_epochs:
            if epoch_loss < active_best:
                active_best = epoch_loss
                since_improve = 0
            else:
                since_improve += 1
                if since_improve % cfg.patience_epochs == 0:
                    lr *= cfg.lr_reduction_factor
                if since_improve >= cfg.early_stop_patience:
                    break

    enc, dec = best_nets if np.isfinite(best) else (enc, dec)
    ae = SafetyAutoencoder(
        encoder=enc,
        decoder=dec,
        latent_dim=latent_dim,
        lambda_latent=lambda_latent,
        lambda_safety=lambda_safety,
    )
    return ae, history


@dataclass
class LatentForecaster:
    net: DenseNet  # m*L (+ m actions) -> L
    m: int
    with_actions: bool
    calls: int = field(default=0, compare=False)

    def forecast(self, latent_windows: np.ndarray) -> np.ndarray:
        self.calls += 1
        return nets.forward(self.net, np.atleast_2d(latent_windows))


def train_latent_forecaster(
    pairs: list[ForecastSample],
    ae: SafetyAutoencoder,
    cfg: TrainConfig,
    hidden: tuple[int, ...] = (32,),
) -> tuple[LatentForecaster, list[float]]:
    """One-step latent forecaster; targets are encoded true next frames."""
    if not pairs:
        raise ValueError("no forecast pairs")
    dim = _flat_image(pairs[0].window[0]).size
    if dim != ae.encoder.input_dim:
        raise ValueError(
            f"frame size {dim} does not match autoencoder input {ae.encoder.input_dim}"
        )
    with_actions = pairs[0].actions is not None
    m = len(pairs[0].window)
    L = ae.latent_dim

    frames = np.stack([_flat_image(f) for p in pairs for f in p.window])
    latents = ae.encode(frames).reshape(len(pairs), m * L)
    if with_actions:
        acts = np.array([p.actions for p in pairs], dtype=float)
        X = np.concatenate([latents, acts], axis=1)
    else:
        X = latents
    Y = ae.encode(np.stack([_flat_image(p.target) for p in pairs]))

    dims = [X.shape[1], *hidden, L]
    activations = ["relu"] * len(hidden) + ["identity"]
    net = nets.make_net(dims, activations, seed=cfg.seed)
    # Same output-width step scaling as the image forecaster.
    scaled = replace(cfg, learning_rate=cfg.learning_rate * L)
    net, history = nets.sgd_train(net, (X, Y), scaled, "mse")
    return LatentForecaster(net=net, m=m, with_actions=with_actions), history


# ---------------------------------------------------------------------------
# composite predictors and the common prediction surface


@dataclass
class CompositeImagePredictor:
    forecaster: ImageForecaster
    evaluator: Evaluator
    m: int
    k: int
    controller_specific: bool


@dataclass
class CompositeLatentPredictor:
    autoencoder: SafetyAutoencoder
    forecaster: LatentForecaster
    evaluator: Evaluator
    m: int
    k: int
    controller_specific: bool


LabelPredictor = MonolithicPredictor | CompositeImagePredictor | CompositeLatentPredictor


def _window_batch(windows, actions) -> tuple[np.ndarray, np.ndarray | None]:
    frames = np.stack([np.stack([_flat_image(f) for f in w]) for w in windows])
    if actions is None:
        return frames, None
    return frames, np.asarray(actions, dtype=float)


def _rollout_actions(last_actions: np.ndarray | None) -> np.ndarray | None:
    # Future controller outputs are unknown at prediction time; hold the
    # most recent action for forecast steps.
    if last_actions is None:
        return None
    return np.concatenate(
        [last_actions[:, 1:], last_actions[:, -1:]], axis=1
    )


def predict_scores_batch(p: LabelPredictor, windows, actions=None) -> np.ndarray:
    """Safe-probability for each window; composites roll their forecaster k times."""
    if isinstance(p, MonolithicPredictor):
        if actions is None:
            X = np.stack([flatten_window(w) for w in windows])
        else:
            X = np.stack([flatten_window(w, a) for w, a in zip(windows, actions)])
        return nets.softmax(nets.forward(p.net, X))[:, 1]

    frames, acts = _window_batch(windows, actions)
    n = frames.shape[0]
    if isinstance(p, CompositeImagePredictor):
        for _ in range(p.k):
            x = frames[:, -p.m :, :].reshape(n, -1)
            if p.forecaster.with_actions:
                x = np.concatenate([x, acts], axis=1)
            nxt = p.forecaster.forecast(x)
            frames = np.concatenate([frames, nxt[:, None, :]], axis=1)
            acts = _rollout_actions(acts)
        return p.evaluator.scores(frames[:, -1, :])

    if isinstance(p, CompositeLatentPredictor):
        flat = frames.reshape(n * frames.shape[1], -1)
        lat = p.autoencoder.encode(flat).reshape(n, frames.shape[1], -1)
        for _ in range(p.k):
            x = lat[:, -p.m :, :].reshape(n, -1)
            if p.forecaster.with_actions:
                x = np.concatenate([x, acts], axis=1)
            nxt = p.forecaster.forecast(x)
            lat = np.concatenate([lat, nxt[:, None, :]], axis=1)
            acts = _rollout_actions(acts)
        return p.evaluator.scores(p.autoencoder.decode(lat[:, -1, :]))

    raise TypeError(f"not a label predictor: {type(p).__name__}")


def predict_score(p: LabelPredictor, window, actions=None) -> float:
    if len(window) != p.m:
        raise ValueError(f"window length {len(window)} != m={p.m}")
    acts = None if actions is None else [actions]
    return float(predict_scores_batch(p, [window], acts)[0])


def predict_label(p: LabelPredictor, window, actions=None) -> int:
    """Hard label; the tie at score exactly 0.5 resolves to unsafe."""
    return 1 if predict_score(p, window, actions) > 0.5 else 0


def dataset_scores(p: LabelPredictor, ds: Dataset) -> np.ndarray:
    with_actions = not p.controller_specific
    windows = [s.window for s in ds.samples]
    actions = [s.actions for s in ds.samples] if with_actions else None
    return predict_scores_batch(p, windows, actions)


def dataset_logits(p: MonolithicPredictor, ds: Dataset) -> np.ndarray:
    X = dataset_matrix(ds, with_actions=not p.controller_specific)
    return nets.forward(p.net, X)


# ---------------------------------------------------------------------------
# bundles


def _evaluator_to_dict(e: Evaluator) -> dict:
    d = {"kind": e.kind, "augmentation": e.augmentation}
    if e.net is not None:
        d["net"] = nets.net_to_dict(e.net)
    return d


def _evaluator_from_dict(d: dict) -> Evaluator:
    return Evaluator(
        kind=d["kind"],
        net=nets.net_from_dict(d["net"]) if "net" in d else None,
        augmentation=d["augmentation"],
    )


def predictor_to_dict(p: LabelPredictor) -> dict:
    base = {"m": p.m, "k": p.k, "controller_specific": p.controller_specific}
    if isinstance(p, MonolithicPredictor):
        return {"kind": "monolithic", "net": nets.net_to_dict(p.net), **base}
    if isinstance(p, CompositeImagePredictor):
        return {
            "kind": "composite_image",
            "forecaster": {
                "net": nets.net_to_dict(p.forecaster.net),
                "m": p.forecaster.m,
                "with_actions": p.forecaster.with_actions,
            },
            "evaluator": _evaluator_to_dict(p.evaluator),
            **base,
        }
    if isinstance(p, CompositeLatentPredictor):
        return {
            "kind": "composite_latent",
            "autoencoder": {
                "encoder": nets.net_to_dict(p.autoencoder.encoder),
                "decoder": nets.net_to_dict(p.autoencoder.decoder),
                "latent_dim": p.autoencoder.latent_dim,
                "lambda_latent": p.autoencoder.lambda_latent,
                "lambda_safety": p.autoencoder.lambda_safety,
            },
            "forecaster": {
                "net": nets.net_to_dict(p.forecaster.net),
                "m": p.forecaster.m,
                "with_actions": p.forecaster.with_actions,
            },
            "evaluator": _evaluator_to_dict(p.evaluator),
            **base,
        }
    raise TypeError(f"not a label predictor: {type(p).__name__}")


def predictor_from_dict(d: dict) -> LabelPredictor:
    base = dict(m=d["m"], k=d["k"], controller_specific=d["controller_specific"])
    if d["kind"] == "monolithic":
        return MonolithicPredictor(net=nets.net_from_dict(d["net"]), **base)
    if d["kind"] == "composite_image":
        f = d["forecaster"]
        return CompositeImagePredictor(
            forecaster=ImageForecaster(
                net=nets.net_from_dict(f["net"]), m=f["m"], with_actions=f["with_actions"]
            ),
            evaluator=_evaluator_from_dict(d["evaluator"]),
            **base,
        )
    if d["kind"] == "composite_latent":
        a = d["autoencoder"]
        f = d["forecaster"]
        return CompositeLatentPredictor(
            autoencoder=SafetyAutoencoder(
                encoder=nets.net_from_dict(a["encoder"]),
                decoder=nets.net_from_dict(a["decoder"]),
                latent_dim=a["latent_dim"],
                lambda_latent=a["lambda_latent"],
                lambda_safety=a["lambda_safety"],
            ),
            forecaster=LatentForecaster(
                net=nets.net_from_dict(f["net"]), m=f["m"], with_actions=f["with_actions"]
            ),
            evaluator=_evaluator_from_dict(d["evaluator"]),
            **base,
        )
    raise ValueError(f"unknown predictor kind {d['kind']!r}")


def save_predictor(p: LabelPredictor, path) -> None:
    with open(path, "w") as fh:
        json.dump(predictor_to_dict(p), fh, sort_keys=True, separators=(",", ":"))


def load_predictor(path) -> LabelPredictor:
    with open(path) as fh:
        return predictor_from_dict(json.load(fh))
