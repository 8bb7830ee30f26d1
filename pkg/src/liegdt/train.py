"""Desk-scale self-supervised transformation regression.

A Siamese 2-layer dense encoder reads an image and its warped copy; a
linear decoder maps the two 32-dim feature vectors to 8 reals, which fill a
3x3 matrix row-major with the last entry fixed to one.  After unit-det
normalization the prediction is compared to the true transformation by the
projection surrogate loss (or plain MSE), and exact analytic gradients flow
back through the normalization, the decoder, and the shared encoder.
Optimization is Adam with decoupled weight decay.  Everything is seeded and
single-threaded, so a run is reproducible bit for bit.
"""

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import SingularMatrixError, TrainingDivergedError
from .geometry import (
    Homography,
    mse_loss,
    project_so3,
    rotation_angle,
    surrogate_loss,
)
from .sampler import (
    Rng,
    make_synthetic_image,
    params_to_homography,
    sample_params,
    to_unit_frame,
    warp_image,
)

log = logging.getLogger(__name__)

__all__ = [
    "ModelWeights",
    "AdamState",
    "TrainConfig",
    "TrainReport",
    "init_weights",
    "decoder_output_to_homography",
    "forward",
    "backward",
    "loss_head_grad",
    "train",
    "evaluate_angle_error",
    "load_train_config",
    "write_report_csv",
    "report_summary",
    "write_report_json",
]

# substream domains carved out of the run seed
DOMAIN_TRAIN_IMAGE = 1
DOMAIN_TRAIN_PARAMS = 2
DOMAIN_INIT = 3
DOMAIN_EVAL_IMAGE = 4
DOMAIN_EVAL_PARAMS = 5

_IDENTITY_RAW8 = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])

LOSS_KINDS = ("gdt_surrogate", "mse")


@dataclass
class TrainConfig:
    minibatch_size: int = 32
    steps: int = 2000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 5e-4
    lam: float = 1.0
    loss_kind: str = "gdt_surrogate"
    angle_power: int = 1
    image_size: int = 32
    seed: int = 1
    hidden1: int = 64
    hidden2: int = 32

    def __post_init__(self):
        if self.minibatch_size < 1:
            raise ValueError("minibatch_size must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("betas must lie in (0, 1)")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}")
        if self.angle_power not in (1, 2):
            raise ValueError("angle_power must be 1 or 2")
        if self.image_size < 8:
            raise ValueError("image_size must be >= 8")
        if self.hidden1 < 1 or self.hidden2 < 1:
            raise ValueError("hidden widths must be >= 1")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


def load_train_config(path) -> TrainConfig:
    """Read a TrainConfig from a JSON key-value file."""
    with open(path) as fh:
        return TrainConfig.from_dict(json.load(fh))


@dataclass
class ModelWeights:
    """All trainable tensors.  Encoder weights are shared by both branches."""

    enc_w1: np.ndarray  # (in_dim, hidden1)
    enc_b1: np.ndarray  # (hidden1,)
    enc_w2: np.ndarray  # (hidden1, hidden2)
    enc_b2: np.ndarray  # (hidden2,)
    dec_w: np.ndarray  # (2 * hidden2, 8)
    dec_b: np.ndarray  # (8,)

    def tensors(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "ModelWeights":
        return ModelWeights(**{k: v.copy() for k, v in self.tensors().items()})

    def digest(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.tensors()):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            h.update(name.encode())
            h.update(str(arr.shape).encode())
            h.update(arr.tobytes())
        return h.hexdigest()

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors().values())


@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def for_weights(cls, weights: ModelWeights) -> "AdamState":
        zeros = {k: np.zeros_like(v) for k, v in weights.tensors().items()}
        return cls(m=zeros, v={k: v.copy() for k, v in zeros.items()}, step=0)


@dataclass
class TrainReport:
    losses: list
    angle_errors: list
    wall_clock_s: float
    weights_digest: str
    skipped_samples: int
    weights: ModelWeights = field(repr=False, default=None)


def init_weights(config: TrainConfig) -> ModelWeights:
    """Seeded initialization: fan-in uniform weights, zero biases, except the
    decoder bias, which starts at the flattened-identity pattern so the very
    first predictions are valid group elements rather than near-singular
    noise.  The decoder weights get a reduced gain for the same reason:
    determinants of the predicted matrices must start well away from zero,
    where the normalization chain amplifies gradients without bound."""
    rng = Rng(config.seed).derive(DOMAIN_INIT)
    in_dim = config.image_size * config.image_size

    def fan_in_uniform(shape, gain=1.0):
        bound = gain / np.sqrt(shape[0])
        return rng.uniform(-bound, bound, size=shape)

    return ModelWeights(
        enc_w1=fan_in_uniform((in_dim, config.hidden1)),
        enc_b1=np.zeros(config.hidden1),
        enc_w2=fan_in_uniform((config.hidden1, config.hidden2)),
        enc_b2=np.zeros(config.hidden2),
        dec_w=fan_in_uniform((2 * config.hidden2, 8), gain=0.3),
        dec_b=_IDENTITY_RAW8.copy(),
    )


def decoder_output_to_homography(raw8) -> Homography:
    """Fill a 3x3 matrix row-major from 8 reals, fix the ninth entry to one,
    and normalise to unit determinant."""
    raw8 = np.asarray(raw8, dtype=float)
    if raw8.shape != (8,):
        raise ValueError(f"expected 8 decoder outputs, got shape {raw8.shape}")
    m = np.append(raw8, 1.0).reshape(3, 3)
    return Homography(m)


# ---------------------------------------------------------------------------
# Forward / backward


def _forward_batch(weights: ModelWeights, xb: np.ndarray, txb: np.ndarray):
    a1x = xb @ weights.enc_w1 + weights.enc_b1
    h1x = np.maximum(a1x, 0.0)
    a2x = h1x @ weights.enc_w2 + weights.enc_b2
    h2x = np.maximum(a2x, 0.0)

    a1t = txb @ weights.enc_w1 + weights.enc_b1
    h1t = np.maximum(a1t, 0.0)
    a2t = h1t @ weights.enc_w2 + weights.enc_b2
    h2t = np.maximum(a2t, 0.0)

    feat = np.concatenate([h2x, h2t], axis=1)
    raw = feat @ weights.dec_w + weights.dec_b
    cache = {
        "weights": weights,
        "xb": xb,
        "txb": txb,
        "a1x": a1x,
        "h1x": h1x,
        "a2x": a2x,
        "a1t": a1t,
        "h1t": h1t,
        "a2t": a2t,
        "feat": feat,
    }
    return raw, cache


def _backward_batch(cache: dict, grad_raw: np.ndarray) -> dict:
    w = cache["weights"]
    feat = cache["feat"]
    h2 = w.dec_w.shape[0] // 2

    d_dec_w = feat.T @ grad_raw
    d_dec_b = grad_raw.sum(axis=0)
    dfeat = grad_raw @ w.dec_w.T
    dh2x, dh2t = dfeat[:, :h2], dfeat[:, h2:]

    def branch(dh2, a2, h1, a1, xb):
        da2 = dh2 * (a2 > 0.0)
        d_w2 = h1.T @ da2
        d_b2 = da2.sum(axis=0)
        dh1 = da2 @ w.enc_w2.T
        da1 = dh1 * (a1 > 0.0)
        d_w1 = xb.T @ da1
        d_b1 = da1.sum(axis=0)
        return d_w1, d_b1, d_w2, d_b2

    gx = branch(dh2x, cache["a2x"], cache["h1x"], cache["a1x"], cache["xb"])
    gt = branch(dh2t, cache["a2t"], cache["h1t"], cache["a1t"], cache["txb"])
    return {
        "enc_w1": gx[0] + gt[0],
        "enc_b1": gx[1] + gt[1],
        "enc_w2": gx[2] + gt[2],
        "enc_b2": gx[3] + gt[3],
        "dec_w": d_dec_w,
        "dec_b": d_dec_b,
    }


def forward(weights: ModelWeights, x, tx):
    """Siamese forward pass for one image pair: returns (raw8, cache).

    ``x`` and ``tx`` may be GrayImage values or flat pixel arrays; the same
    encoder weights process both branches.
    """

    def flat(img):
        px = img.pixels if hasattr(img, "pixels") else np.asarray(img, dtype=float)
        return px.ravel()[None, :]

    raw, cache = _forward_batch(weights, flat(x), flat(tx))
    return raw[0], cache


def backward(cache: dict, grad_raw8) -> dict:
    """Reverse-mode gradients of ``raw8 . grad_raw8`` for every weight tensor."""
    grad_raw8 = np.asarray(grad_raw8, dtype=float)
    if grad_raw8.ndim == 1:
        grad_raw8 = grad_raw8[None, :]
    return _backward_batch(cache, grad_raw8)


# ---------------------------------------------------------------------------
# Loss head: unit-det normalization chained onto the configured loss


def loss_head_grad(t: Homography, that: Homography, config: TrainConfig):
    """Loss and its gradient w.r.t. the 8 raw decoder outputs.

    ``that`` must come from :func:`decoder_output_to_homography`, whose raw
    matrix had its last entry fixed to one; that entry is recovered from the
    stored normalized form, the loss gradient is pulled back through the
    unit-det normalization, and the constant ninth column is dropped.
    """
    nm = that.m
    # raw matrix M = c * nm with M[2, 2] = 1, so c = 1 / nm[2, 2]
    c = 1.0 / nm[2, 2]
    if config.loss_kind == "mse":
        value, ghat = mse_loss(t, that)
    else:
        res = surrogate_loss(t, that, lam=config.lam, angle_power=config.angle_power)
        value, ghat = res.loss, res.grad_that
    # normalization pullback: dL/dM = (ghat - <ghat, nm>/3 * nm^-T) / c
    inner = float(np.sum(ghat * nm))
    grad_m = (ghat - inner / 3.0 * np.linalg.inv(nm).T) / c
    return value, grad_m.ravel()[:8].copy()


# ---------------------------------------------------------------------------
# Training loop


def _make_pair(root: Rng, image_domain: int, params_domain: int, index: int, size: int):
    """One training pair plus its truth transformation in the unit frame.

    Warping happens in pixel coordinates; the regression target is the same
    transformation conjugated into the [-1, 1] frame, where entries are O(1)
    and the angle and residual loss terms carry comparable weight.
    """
    img = make_synthetic_image(root.derive(image_domain, index), size, size)
    params = sample_params(root.derive(params_domain, index))
    t_pix = params_to_homography(params, size, size)
    return img, warp_image(img, t_pix), to_unit_frame(t_pix, size, size)


def _adam_update(weights: ModelWeights, grads: dict, state: AdamState, config: TrainConfig):
    state.step += 1
    bias1 = 1.0 - config.beta1**state.step
    bias2 = 1.0 - config.beta2**state.step
    for name, w in weights.tensors().items():
        g = grads[name]
        state.m[name] = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        state.v[name] = config.beta2 * state.v[name] + (1.0 - config.beta2) * g * g
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        w -= config.learning_rate * m_hat / (np.sqrt(v_hat) + 1e-8)
        # decoupled weight decay, outside the moment estimates
        w -= config.learning_rate * config.weight_decay * w


def train(config: TrainConfig) -> TrainReport:
    """Run the full self-training loop; deterministic for a fixed config.

    Per step: draw a minibatch of synthetic images and transformations,
    warp, predict the transformation from the image pair, evaluate the
    configured loss head, backpropagate the mean gradient, and apply one
    Adam step with decoupled weight decay.  Samples whose decoded matrix is
    singular or non-finite are skipped and counted; a minibatch with no
    usable sample, a non-finite loss, or non-finite weights aborts with
    ``TrainingDivergedError``.
    """
    t0 = time.perf_counter()
    weights = init_weights(config)
    root = Rng(config.seed)
    n, size = config.minibatch_size, config.image_size
    losses, angles = [], []
    skipped = 0

    if config.steps == 0:
        return TrainReport([], [], time.perf_counter() - t0, weights.digest(), 0, weights)

    state = AdamState.for_weights(weights)
    for step in range(config.steps):
        xb = np.empty((n, size * size))
        txb = np.empty((n, size * size))
        truths = []
        for i in range(n):
            idx = step * n + i
            img, warped, t_true = _make_pair(
                root, DOMAIN_TRAIN_IMAGE, DOMAIN_TRAIN_PARAMS, idx, size
            )
            xb[i] = img.pixels.ravel()
            txb[i] = warped.pixels.ravel()
            truths.append(t_true)

        raw, cache = _forward_batch(weights, xb, txb)
        grad_raw = np.zeros((n, 8))
        sample_losses = []
        sample_angles = []
        for i in range(n):
            try:
                that = decoder_output_to_homography(raw[i])
            except (SingularMatrixError, ValueError):
                skipped += 1
                log.debug("step %d sample %d: singular decoder output, skipped", step, i)
                continue
            value, g8 = loss_head_grad(truths[i], that, config)
            grad_raw[i] = g8
            sample_losses.append(value)
            rel = np.linalg.inv(truths[i].m) @ that.m
            sample_angles.append(rotation_angle(project_so3(rel).m))

        if not sample_losses:
            raise TrainingDivergedError(
                "every sample in the minibatch decoded to a singular matrix",
                step=step,
                recent_losses=losses[-5:],
            )
        loss_value = float(np.mean(sample_losses))
        if not np.isfinite(loss_value):
            raise TrainingDivergedError(
                f"loss became non-finite ({loss_value})", step=step, recent_losses=losses[-5:]
            )

        grads = _backward_batch(cache, grad_raw / len(sample_losses))
        _adam_update(weights, grads, state, config)
        if not weights.all_finite():
            raise TrainingDivergedError(
                "weights became non-finite after update", step=step, recent_losses=losses[-5:]
            )

        losses.append(loss_value)
        angles.append(float(np.mean(sample_angles)))
        if step % 200 == 0:
            log.info("step %d: loss %.4f, angle error %.4f", step, losses[-1], angles[-1])

    return TrainReport(
        losses=losses,
        angle_errors=angles,
        wall_clock_s=time.perf_counter() - t0,
        weights_digest=weights.digest(),
        skipped_samples=skipped,
        weights=weights,
    )


def evaluate_angle_error(weights: ModelWeights, config: TrainConfig, pairs: int = 512) -> float:
    """Mean rotation-angle error over a held-out eval stream.

    The stream is derived from the config seed on domains never touched by
    training.  Pairs whose prediction decodes to a singular matrix score the
    worst possible angle (pi).
    """
    size = config.image_size
    root = Rng(config.seed)
    total = 0.0
    for i in range(pairs):
        img, warped, t_true = _make_pair(root, DOMAIN_EVAL_IMAGE, DOMAIN_EVAL_PARAMS, i, size)
        raw, _ = forward(weights, img, warped)
        try:
            that = decoder_output_to_homography(raw)
        except (SingularMatrixError, ValueError):
            total += np.pi
            continue
        total += rotation_angle(project_so3(np.linalg.inv(t_true.m) @ that.m).m)
    return total / pairs


# ---------------------------------------------------------------------------
# Report serialization


def write_report_csv(report: TrainReport, path):
    lines = ["step,loss,angle_error"]
    for i, (loss, angle) in enumerate(zip(report.losses, report.angle_errors)):
        lines.append(f"{i},{loss!r},{angle!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def report_summary(report: TrainReport, config: TrainConfig, include_wall_clock=True) -> dict:
    tail = report.losses[-100:]
    head = report.losses[:100]
    summary = {
        "config": config.to_dict(),
        "steps_run": len(report.losses),
        "final_loss": report.losses[-1] if report.losses else None,
        "final_angle_error": report.angle_errors[-1] if report.angle_errors else None,
        "smoothed_initial_loss": float(np.mean(head)) if head else None,
        "smoothed_final_loss": float(np.mean(tail)) if tail else None,
        "skipped_samples": report.skipped_samples,
        "weights_digest": report.weights_digest,
    }
    if include_wall_clock:
        summary["wall_clock_s"] = report.wall_clock_s
    return summary


def write_report_json(report: TrainReport, config: TrainConfig, path, include_wall_clock=True):
    with open(path, "w") as fh:
        json.dump(report_summary(report, config, include_wall_clock), fh, indent=2)
        fh.write("\n")
