"""Many-to-one stacked LSTM regressor, trained from scratch with BPTT.

Architecture per the training recipe: four unidirectional LSTM layers of 16
units, inverted dropout (p = 0.17) on the activations passed between layers
(fresh masks per timestep, none after the last layer), and a linear head on
the final timestep's top hidden state with no activation. Loss is mean
absolute error on normalized [0, 1] targets; the optimizer is bias-corrected
Adam. Everything runs in float64 and is deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import QualityScore
from .features import FeatureSequence
from .kernels import lstm_layer_backward, lstm_layer_forward

CHECKPOINT_FORMAT = "lstm-ckpt/1"


class DivergenceError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class LstmConfig:
    input_dim: int
    hidden_dim: int = 16
    num_layers: int = 4
    dropout_p: float = 0.17

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden_dim < 1 or self.num_layers < 1:
            raise ValueError("input_dim, hidden_dim and num_layers must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")

    def layer_input_dim(self, layer: int) -> int:
        return self.input_dim if layer == 0 else self.hidden_dim


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 8
    learning_rate: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate < 0:
            raise ValueError("epochs and batch_size must be >= 1, learning_rate >= 0")


@dataclass
class LstmParams:
    """All weights, kept per layer. Gate blocks are ordered (i, f, g, o)."""

    w_in: list[np.ndarray]  # per layer (4H, layer input dim)
    w_rec: list[np.ndarray]  # per layer (4H, H)
    bias: list[np.ndarray]  # per layer (4H,)
    head_w: np.ndarray  # (H,)
    head_b: np.ndarray  # (1,)

    def tensors(self) -> list[np.ndarray]:
        """Flattening order used by Adam, checkpoints and the gradient check."""
        out: list[np.ndarray] = []
        for l in range(len(self.w_in)):
            out += [self.w_in[l], self.w_rec[l], self.bias[l]]
        out += [self.head_w, self.head_b]
        return out


def init_params(config: LstmConfig, rng: np.random.Generator) -> LstmParams:
    """Xavier-uniform weights, zero biases except forget gates at 1.0."""
    h = config.hidden_dim

    def xavier(shape, fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=shape)

    w_in, w_rec, bias = [], [], []
    for l in range(config.num_layers):
        d = config.layer_input_dim(l)
        w_in.append(xavier((4 * h, d), d, 4 * h))
        w_rec.append(xavier((4 * h, h), h, 4 * h))
        b = np.zeros(4 * h)
        b[h : 2 * h] = 1.0
        bias.append(b)
    head_w = xavier((h,), h, 1)
    return LstmParams(w_in=w_in, w_rec=w_rec, bias=bias, head_w=head_w, head_b=np.zeros(1))


def zeros_like_params(params: LstmParams) -> LstmParams:
    return LstmParams(
        w_in=[np.zeros_like(a) for a in params.w_in],
        w_rec=[np.zeros_like(a) for a in params.w_rec],
        bias=[np.zeros_like(a) for a in params.bias],
        head_w=np.zeros_like(params.head_w),
        head_b=np.zeros_like(params.head_b),
    )


def flatten_params(params: LstmParams) -> np.ndarray:
    return np.concatenate([t.ravel() for t in params.tensors()])


def unflatten_params(flat: np.ndarray, config: LstmConfig) -> LstmParams:
    flat = np.asarray(flat, dtype=np.float64)
    h = config.hidden_dim
    pos = 0

    def take(shape):
        nonlocal pos
        n = int(np.prod(shape))
        out = flat[pos : pos + n].reshape(shape).copy()
        pos += n
        return out

    w_in, w_rec, bias = [], [], []
    for l in range(config.num_layers):
        d = config.layer_input_dim(l)
        w_in.append(take((4 * h, d)))
        w_rec.append(take((4 * h, h)))
        bias.append(take((4 * h,)))
    head_w = take((h,))
    head_b = take((1,))
    if pos != flat.size:
        raise ValueError(f"parameter vector has {flat.size} values, config needs {pos}")
    return LstmParams(w_in=w_in, w_rec=w_rec, bias=bias, head_w=head_w, head_b=head_b)


def _as_matrix(features, config: LstmConfig) -> np.ndarray:
    x = features.vectors if isinstance(features, FeatureSequence) else np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != config.input_dim:
        raise ValueError(f"feature matrix shape {x.shape} does not match input_dim {config.input_dim}")
    if x.shape[0] < 1:
        raise ValueError("empty feature sequence")
    return np.ascontiguousarray(x, dtype=np.float64)


def make_dropout_masks(config: LstmConfig, t_len: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Inverted-dropout masks for each between-layer boundary, per timestep."""
    if config.dropout_p == 0.0:
        return [np.ones((t_len, config.hidden_dim)) for _ in range(config.num_layers - 1)]
    keep = 1.0 - config.dropout_p
    return [
        (rng.random((t_len, config.hidden_dim)) < keep) / keep
        for _ in range(config.num_layers - 1)
    ]


def _forward_stack(params: LstmParams, config: LstmConfig, x: np.ndarray, masks):
    """Run all layers; returns (prediction, per-layer caches for backward)."""
    caches = []
    layer_in = x
    h = None
    for l in range(config.num_layers):
        gates, h, c = lstm_layer_forward(layer_in, params.w_in[l], params.w_rec[l], params.bias[l])
        caches.append((layer_in, gates, h, c))
        if l < config.num_layers - 1:
            layer_in = h * masks[l] if masks is not None else h
    pred = float(h[-1] @ params.head_w + params.head_b[0])
    return pred, caches


def forward(params: LstmParams, config: LstmConfig, features, mode: str = "eval",
            rng: np.random.Generator | None = None) -> float:
    """Predict the normalized score for one sequence.

    mode "eval" is deterministic; mode "train" applies seeded inverted
    dropout between layers and requires an rng.
    """
    x = _as_matrix(features, config)
    if mode == "eval":
        masks = None
    elif mode == "train":
        if rng is None:
            raise ValueError("train mode needs an rng for dropout masks")
        masks = make_dropout_masks(config, x.shape[0], rng)
    else:
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    pred, _ = _forward_stack(params, config, x, masks)
    return pred


def backward(params: LstmParams, config: LstmConfig, features, target: float,
             dropout_masks: list[np.ndarray] | None) -> tuple[float, LstmParams]:
    """Loss |prediction - target| and its gradients via BPTT.

    dropout_masks are replayed exactly as the forward pass will use them
    (None means no dropout). The subgradient of |r| at r = 0 is 0.
    """
    x = _as_matrix(features, config)
    pred, caches = _forward_stack(params, config, x, dropout_masks)
    residual = pred - target
    loss = abs(residual)
    dpred = 0.0 if residual == 0.0 else (1.0 if residual > 0.0 else -1.0)

    grads = zeros_like_params(params)
    top_h = caches[-1][2]
    grads.head_w[:] = dpred * top_h[-1]
    grads.head_b[0] = dpred

    dh_next = np.zeros_like(top_h)
    dh_next[-1] = dpred * params.head_w
    for l in range(config.num_layers - 1, -1, -1):
        layer_in, gates, h, c = caches[l]
        dx, dw_in, dw_rec, dbias = lstm_layer_backward(
            layer_in, params.w_in[l], params.w_rec[l], gates, h, c, dh_next
        )
        grads.w_in[l][:] = dw_in
        grads.w_rec[l][:] = dw_rec
        grads.bias[l][:] = dbias
        if l > 0:
            dh_next = dx * dropout_masks[l - 1] if dropout_masks is not None else dx
    return loss, grads


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: LstmParams) -> "AdamState":
        return cls(
            m=[np.zeros_like(a) for a in params.tensors()],
            v=[np.zeros_like(a) for a in params.tensors()],
        )


def adam_step(params: LstmParams, grads: LstmParams, state: AdamState,
              train_config: TrainConfig) -> tuple[LstmParams, AdamState]:
    """One bias-corrected Adam update, in place; returns (params, state)."""
    b1, b2, eps = train_config.adam_beta1, train_config.adam_beta2, train_config.adam_eps
    state.t += 1
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params.tensors(), grads.tensors(), state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= train_config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state


def train(dataset, config: LstmConfig, train_config: TrainConfig):
    """Fit the model; returns (params, per-epoch mean training loss).

    dataset is a list of (features, normalized target) pairs; sequences may
    have different lengths and are processed independently within a batch,
    with gradients averaged and one Adam step per batch.
    """
    if not dataset:
        raise ValueError("empty training dataset")
    data = [(_as_matrix(f, config), float(y)) for f, y in dataset]
    rng = np.random.default_rng(np.random.PCG64(train_config.seed))
    params = init_params(config, rng)
    state = AdamState.for_params(params)

    history: list[float] = []
    n = len(data)
    for epoch in range(train_config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, train_config.batch_size):
            batch = order[start : start + train_config.batch_size]
            total = zeros_like_params(params)
            for idx in batch:
                x, y = data[idx]
                masks = make_dropout_masks(config, x.shape[0], rng)
                loss, grads = backward(params, config, x, y, masks)
                epoch_loss += loss
                for acc, g in zip(total.tensors(), grads.tensors()):
                    acc += g
            inv = 1.0 / len(batch)
            for acc in total.tensors():
                acc *= inv
            params, state = adam_step(params, total, state, train_config)
        mean_loss = epoch_loss / n
        if not np.isfinite(mean_loss):
            raise DivergenceError(f"training loss became non-finite at epoch {epoch}")
        history.append(mean_loss)
    return params, history


def predict(params: LstmParams, config: LstmConfig, features) -> QualityScore:
    """Eval-mode forward, clamped to [0, 1], reported on the raw 0..50 scale."""
    pred = forward(params, config, features, mode="eval")
    return QualityScore.from_normalized(min(1.0, max(0.0, pred)))


def save_checkpoint(params: LstmParams, config: LstmConfig, path: str | Path) -> None:
    """One JSON header line (format + config + count), then raw little-endian float64."""
    flat = flatten_params(params)
    header = {
        "format": CHECKPOINT_FORMAT,
        "input_dim": config.input_dim,
        "hidden_dim": config.hidden_dim,
        "num_layers": config.num_layers,
        "dropout_p": config.dropout_p,
        "param_count": int(flat.size),
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        fh.write(flat.astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[LstmParams, LstmConfig]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        blob = fh.read()
    try:
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: bad checkpoint header: {exc}") from exc
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: format {header.get('format')!r}, expected {CHECKPOINT_FORMAT!r}")
    config = LstmConfig(
        input_dim=int(header["input_dim"]),
        hidden_dim=int(header["hidden_dim"]),
        num_layers=int(header["num_layers"]),
        dropout_p=float(header["dropout_p"]),
    )
    flat = np.frombuffer(blob, dtype="<f8")
    if flat.size != header["param_count"]:
        raise ValueError(f"{path}: expected {header['param_count']} parameters, found {flat.size}")
    return unflatten_params(flat, config), config


def write_loss_history(history: list[float], path: str | Path) -> None:
    lines = ["epoch,mean_mae"]
    lines += [f"{i + 1},{loss:.9f}" for i, loss in enumerate(history)]
    Path(path).write_text("\n".join(lines) + "\n")
