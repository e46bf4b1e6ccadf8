"""Training protocol, input conditioning, checkpoints and prediction."""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..exceptions import DegenerateDataset, LayoutMismatch, MalformedFile
from .net import NetConfig, forward, init_parameters, loss_and_gradients, param_count, softmax, weight_mask
from .optim import AdamState, adam_step, lr_schedule

log = logging.getLogger(__name__)

__all__ = [
    "Checkpoint",
    "Conditioner",
    "TrainConfig",
    "early_stopping_trace",
    "predict",
    "predict_proba",
    "train",
]


DECAY_MODES = ("l2", "decoupled")


@dataclass(frozen=True)
class TrainConfig:
    initial_lr: float = 1e-4
    min_lr: float = 0.0
    cycle: int = 64
    weight_decay: float = 1e-3
    decay_mode: str = "l2"
    batch_size: int = 32
    max_epochs: int = 20
    patience: int = 5
    val_fraction: float = 0.2
    log_scale: float = 1e4
    seed: int = 0

    def __post_init__(self):
        positive = ("initial_lr", "cycle", "weight_decay", "batch_size", "max_epochs", "patience", "val_fraction")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.decay_mode not in DECAY_MODES:
            raise ValueError(f"decay_mode must be one of {DECAY_MODES}")
        if self.patience >= self.max_epochs:
            raise ValueError("patience must be smaller than max_epochs")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.min_lr < 0 or self.min_lr > self.initial_lr:
            raise ValueError("min_lr must lie in [0, initial_lr]")
        if self.log_scale < 0:
            raise ValueError("log_scale must be non-negative")


# Batch size used for the full-scale runs; TrainConfig() is the desk default.
FULL_SCALE_PRESET = TrainConfig(batch_size=128)


@dataclass(frozen=True, eq=False)
class Conditioner:
    """``ln(1 + K x)`` compression followed by per-plane standardization.

    ``log_scale`` K = 0 disables the log step (used for raw pixel inputs).
    """

    log_scale: float
    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def _compress(X, log_scale):
        X = np.asarray(X, dtype=np.float64)
        return np.log1p(log_scale * X) if log_scale else X

    @classmethod
    def fit(cls, X, log_scale: float) -> "Conditioner":
        Z = cls._compress(X, log_scale)
        mean = Z.mean(axis=(0, 2, 3))
        std = Z.std(axis=(0, 2, 3))
        std = np.where(std > 0, std, 1.0)
        return cls(float(log_scale), mean, std)

    def transform(self, X, dtype=np.float32) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim != 4 or X.shape[1] != self.mean.size:
            raise LayoutMismatch(f"expected (N, {self.mean.size}, s, s) input, got {X.shape}")
        Z = self._compress(X, self.log_scale)
        return ((Z - self.mean[None, :, None, None]) / self.std[None, :, None, None]).astype(dtype)

    def to_dict(self) -> dict:
        return {"log_scale": self.log_scale, "mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Conditioner":
        return cls(float(d["log_scale"]), np.asarray(d["mean"], dtype=np.float64), np.asarray(d["std"], dtype=np.float64))


@dataclass(eq=False)
class Checkpoint:
    """Everything needed to resume or apply a trained detector."""

    net: NetConfig
    params: np.ndarray
    optimizer: AdamState
    conditioner: Conditioner
    train_config: TrainConfig
    layout: dict
    epoch: int = 0
    best_val_accuracy: float = 0.0

    def check_layout(self, layout: dict) -> None:
        mine = {k: self.layout.get(k) for k in ("input", "order", "pool")}
        theirs = {k: layout.get(k) for k in ("input", "order", "pool")}
        if mine != theirs:
            raise LayoutMismatch(f"checkpoint expects {mine}, got {theirs}")

    def header(self) -> dict:
        return {
            "net": self.net.to_dict(),
            "train": asdict(self.train_config),
            "layout": self.layout,
            "conditioning": self.conditioner.to_dict(),
            "epoch": self.epoch,
            "best_val_accuracy": self.best_val_accuracy,
            "optimizer_step": self.optimizer.step,
            "n_params": int(self.params.size),
        }


CKPT_MAGIC = b"RCMD"
CKPT_VERSION = 1


def checkpoint_to_bytes(ckpt: Checkpoint) -> bytes:
    """``RCMD`` u16 version, u32 header length, JSON header, then params, m, v as f64."""
    head = json.dumps(ckpt.header(), sort_keys=True, separators=(",", ":")).encode()
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes()
        for a in (ckpt.params, ckpt.optimizer.m, ckpt.optimizer.v)
    )
    return CKPT_MAGIC + struct.pack("<HI", CKPT_VERSION, len(head)) + head + body


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    if len(data) < 10 or data[:4] != CKPT_MAGIC:
        raise MalformedFile("not an RCMD checkpoint")
    version, n_head = struct.unpack_from("<HI", data, 4)
    if version != CKPT_VERSION:
        raise LayoutMismatch(f"unsupported checkpoint version {version}")
    pos = 10
    try:
        head = json.loads(data[pos : pos + n_head].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFile(f"bad checkpoint header: {exc}") from exc
    pos += n_head
    try:
        net = NetConfig.from_dict(head["net"])
        n = int(head["n_params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"bad checkpoint header: {exc}") from exc
    if n != param_count(net):
        raise MalformedFile("parameter count does not match the network layout")
    if len(data) != pos + 3 * 8 * n:
        raise MalformedFile("checkpoint length does not match its header")
    vecs = [np.frombuffer(data, dtype="<f8", count=n, offset=pos + 8 * n * k).astype(np.float64) for k in range(3)]
    return Checkpoint(
        net=net,
        params=vecs[0],
        optimizer=AdamState(vecs[1], vecs[2], int(head["optimizer_step"])),
        conditioner=Conditioner.from_dict(head["conditioning"]),
        train_config=TrainConfig(**head["train"]),
        layout=head["layout"],
        epoch=int(head["epoch"]),
        best_val_accuracy=float(head["best_val_accuracy"]),
    )


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    Path(path).write_bytes(checkpoint_to_bytes(ckpt))


def load_checkpoint(path) -> Checkpoint:
    return checkpoint_from_bytes(Path(path).read_bytes())


def early_stopping_trace(val_accuracies, patience: int):
    """Replay the stopping rule over per-epoch validation accuracies.

    Returns ``(stop_epoch, best_epoch)``, both 1-based. Only a strict
    improvement resets the patience counter.
    """
    best, best_epoch, waited = -np.inf, 0, 0
    for epoch, acc in enumerate(val_accuracies, start=1):
        if acc > best:
            best, best_epoch, waited = acc, epoch, 0
        else:
            waited += 1
            if waited >= patience:
                return epoch, best_epoch
    return len(val_accuracies), best_epoch


def _logits_batched(theta, X, config, dtype, chunk=128):
    out = []
    for i in range(0, len(X), chunk):
        out.append(forward(theta.astype(dtype), X[i : i + chunk], config))
    return np.concatenate(out) if out else np.zeros((0, 2))


def _require_both_classes(y, what):
    present = set(np.unique(y).tolist())
    if present != {0, 1}:
        raise DegenerateDataset(f"{what} split must contain both labels, has {sorted(present)}")


def train(
    X_train,
    y_train,
    X_val,
    y_val,
    train_config: TrainConfig = TrainConfig(),
    net_config: NetConfig | None = None,
    layout: dict | None = None,
    dtype=np.float32,
    epoch_callback=None,
):
    """Fit the network with Adam, cosine restarts and early stopping.

    Inputs are raw (unconditioned) arrays ``(N, planes, side, side)``.
    Returns ``(checkpoint, history)`` where the checkpoint holds the epoch with
    the highest validation accuracy and ``history`` has one dict per epoch.
    """
    X_train = np.asarray(X_train)
    X_val = np.asarray(X_val)
    y_train = np.asarray(y_train, dtype=np.int64)
    y_val = np.asarray(y_val, dtype=np.int64)
    _require_both_classes(y_train, "training")
    _require_both_classes(y_val, "validation")
    if net_config is None:
        net_config = NetConfig(input_planes=X_train.shape[1], input_side=X_train.shape[2])
    tc = train_config

    conditioner = Conditioner.fit(X_train, tc.log_scale)
    Xt = conditioner.transform(X_train, dtype)
    Xv = conditioner.transform(X_val, dtype)

    theta = init_parameters(net_config, tc.seed)
    state = AdamState.zeros(theta.size)
    mask = weight_mask(net_config)
    rng = np.random.default_rng(tc.seed)

    history = []
    best = None
    best_acc = -1.0
    waited = 0
    step = 0
    n = len(Xt)
    for epoch in range(1, tc.max_epochs + 1):
        perm = rng.permutation(n)
        losses, correct, lrs = [], 0, []
        for start in range(0, n, tc.batch_size):
            idx = perm[start : start + tc.batch_size]
            lr = lr_schedule(step, tc.cycle, tc.initial_lr, tc.min_lr)
            loss, grad, logits = loss_and_gradients(
                theta.astype(dtype), Xt[idx], y_train[idx], net_config, return_logits=True
            )
            theta, state = adam_step(theta, grad, state, lr, tc.weight_decay, mask, tc.decay_mode == "decoupled")
            step += 1
            losses.append(loss * len(idx))
            lrs.append(lr)
            correct += int(np.sum((logits[:, 1] > logits[:, 0]) == (y_train[idx] == 1)))
        val_logits = _logits_batched(theta, Xv, net_config, dtype)
        val_acc = float(np.mean((val_logits[:, 1] > val_logits[:, 0]) == (y_val == 1)))
        record = {
            "epoch": epoch,
            "loss": float(np.sum(losses) / n),
            "lr": float(lrs[-1]),
            "lr_mean": float(np.mean(lrs)),
            "train_accuracy": correct / n,
            "val_accuracy": val_acc,
            "steps": step,
        }
        history.append(record)
        log.info("epoch %d loss %.4f train %.4f val %.4f", epoch, record["loss"], record["train_accuracy"], val_acc)
        if epoch_callback is not None:
            epoch_callback(record)
        if val_acc > best_acc:
            best_acc, waited = val_acc, 0
            best = (theta.copy(), state.copy(), epoch)
        else:
            waited += 1
            if waited >= tc.patience:
                break

    theta_b, state_b, epoch_b = best
    ckpt = Checkpoint(
        net=net_config,
        params=theta_b,
        optimizer=state_b,
        conditioner=conditioner,
        train_config=tc,
        layout=dict(layout or {}),
        epoch=epoch_b,
        best_val_accuracy=best_acc,
    )
    return ckpt, history


def predict_proba(ckpt: Checkpoint, X, layout: dict | None = None, dtype=np.float64) -> np.ndarray:
    """Probability of the recolored class for each sample in ``X``.

    Runs in float64 by default so results do not depend on batch size.
    """
    if layout is not None:
        ckpt.check_layout(layout)
    X = np.asarray(X)
    if X.ndim == 3:
        X = X[None]
    Xc = ckpt.conditioner.transform(X, dtype)
    logits = _logits_batched(ckpt.params, Xc, ckpt.net, dtype).astype(np.float64)
    return softmax(logits)[:, 1]


def label_from_proba(p) -> np.ndarray:
    # An exact tie goes to "natural".
    return (np.asarray(p) > 0.5).astype(np.int64)


def predict(ckpt: Checkpoint, X, layout: dict | None = None) -> list[dict]:
    p = predict_proba(ckpt, X, layout)
    return [{"label": int(lbl), "probability": float(q)} for lbl, q in zip(label_from_proba(p), p)]
