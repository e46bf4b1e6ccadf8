"""Compact CNN with hand-written forward and backward passes.

Architecture: ``len(blocks)`` blocks of [3x3 conv (stride 1, pad 1) -> ReLU
-> 2x2 max-pool], then global average pooling and a fully connected layer to
two logits. With ``residual`` on, a block whose input and output channel
counts agree adds its input back before the ReLU; blocks that change width get
no skip (there is no projection).

Parameters live in one flat float64 vector; :func:`param_layout` names the
slices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import ShapeMismatch

N_CLASSES = 2


@dataclass(frozen=True)
class NetConfig:
    input_planes: int = 12
    input_side: int = 64
    blocks: tuple = (16, 32, 64)
    residual: bool = False

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if self.input_planes < 1 or not self.blocks or min(self.blocks) < 1:
            raise ValueError("input_planes and block widths must be positive")
        if self.input_side % (2 ** len(self.blocks)):
            raise ValueError(
                f"input_side {self.input_side} must be divisible by 2**{len(self.blocks)}"
            )

    def to_dict(self) -> dict:
        return {
            "input_planes": self.input_planes,
            "input_side": self.input_side,
            "blocks": list(self.blocks),
            "residual": self.residual,
        }

    @classmethod
    def from_dict(cls, d) -> "NetConfig":
        return cls(int(d["input_planes"]), int(d["input_side"]), tuple(d["blocks"]), bool(d["residual"]))


@dataclass(frozen=True)
class Slot:
    name: str
    shape: tuple
    offset: int
    fan_in: int
    is_weight: bool

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def slice(self) -> slice:
        return slice(self.offset, self.offset + self.size)


def param_layout(config: NetConfig) -> list[Slot]:
    slots = []
    offset = 0

    def add(name, shape, fan_in, is_weight):
        nonlocal offset
        s = Slot(name, tuple(shape), offset, fan_in, is_weight)
        slots.append(s)
        offset += s.size

    c_in = config.input_planes
    for i, c_out in enumerate(config.blocks):
        add(f"conv{i}.weight", (3, 3, c_in, c_out), c_in * 9, True)
        add(f"conv{i}.bias", (c_out,), c_in * 9, False)
        c_in = c_out
    add("fc.weight", (N_CLASSES, c_in), c_in, True)
    add("fc.bias", (N_CLASSES,), c_in, False)
    return slots


def param_count(config: NetConfig) -> int:
    last = param_layout(config)[-1]
    return last.offset + last.size


def weight_mask(config: NetConfig) -> np.ndarray:
    """Boolean mask over the flat vector: True on weights, False on biases."""
    mask = np.zeros(param_count(config), dtype=bool)
    for s in param_layout(config):
        if s.is_weight:
            mask[s.slice] = True
    return mask


def init_parameters(config: NetConfig, seed: int) -> np.ndarray:
    """Kaiming-normal weights (std ``sqrt(2 / fan_in)``), zero biases."""
    rng = np.random.default_rng(seed)
    theta = np.zeros(param_count(config))
    for s in param_layout(config):
        if s.is_weight:
            theta[s.slice] = rng.normal(0.0, np.sqrt(2.0 / s.fan_in), size=s.size)
    return theta


def unpack(theta: np.ndarray, config: NetConfig) -> dict:
    return {s.name: theta[s.slice].reshape(s.shape) for s in param_layout(config)}


# -- layers -----------------------------------------------------------------
# Activations are NHWC internally and conv kernels are stored (3, 3, C, O).


def _conv_forward(x, w, b):
    n, h, ww, c = x.shape
    o = w.shape[-1]
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((n, h, ww, 3, 3, c), dtype=x.dtype)
    for i in range(3):
        for j in range(3):
            cols[:, :, :, i, j, :] = xp[:, i : i + h, j : j + ww, :]
    cols = cols.reshape(n * h * ww, 9 * c)
    out = cols @ w.reshape(9 * c, o) + b
    return out.reshape(n, h, ww, o), cols


def _conv_backward(dout, cols, w, x_shape, need_dx=True):
    n, h, ww, c = x_shape
    o = w.shape[-1]
    d = dout.reshape(-1, o)
    dw = (cols.T @ d).reshape(w.shape)
    db = d.sum(axis=0)
    if not need_dx:
        return None, dw, db
    dcols = (d @ w.reshape(9 * c, o).T).reshape(n, h, ww, 3, 3, c)
    dxp = np.zeros((n, h + 2, ww + 2, c), dtype=dout.dtype)
    for i in range(3):
        for j in range(3):
            dxp[:, i : i + h, j : j + ww, :] += dcols[:, :, :, i, j, :]
    return dxp[:, 1:-1, 1:-1, :], dw, db


def _maxpool_forward(x):
    n, h, w, c = x.shape
    blocks = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
    return out, arg


def _maxpool_backward(dout, arg, shape):
    n, h, w, c = shape
    dblocks = np.zeros((n, h // 2, w // 2, c, 4), dtype=dout.dtype)
    np.put_along_axis(dblocks, arg[..., None], dout[..., None], axis=-1)
    return dblocks.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(shape)


def _check_input(x, config):
    x = np.asarray(x)
    expected = (config.input_planes, config.input_side, config.input_side)
    if x.ndim != 4 or x.shape[1:] != expected:
        raise ShapeMismatch(f"batch shape {x.shape} does not match (N, {expected})")
    return x


def _forward(theta, x, config, keep_cache):
    p = unpack(theta, config)
    cache = []
    h = np.ascontiguousarray(x.transpose(0, 2, 3, 1))
    for i in range(len(config.blocks)):
        w, b = p[f"conv{i}.weight"], p[f"conv{i}.bias"]
        z, cols = _conv_forward(h, w, b)
        skip = config.residual and h.shape[-1] == z.shape[-1]
        if skip:
            z = z + h
        a = np.maximum(z, 0)
        pooled, arg = _maxpool_forward(a)
        if keep_cache:
            cache.append((cols, h.shape, z > 0, arg, a.shape, skip))
        h = pooled
    feat = h.mean(axis=(1, 2))
    logits = feat @ p["fc.weight"].T + p["fc.bias"]
    return logits, (p, cache, feat, h.shape)


def forward(theta: np.ndarray, x: np.ndarray, config: NetConfig) -> np.ndarray:
    """Logits of shape ``(N, 2)`` for a batch ``(N, planes, side, side)``.

    Computation runs in ``theta``'s dtype.
    """
    x = _check_input(x, config)
    return _forward(theta, x.astype(theta.dtype, copy=False), config, False)[0]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_gradients(theta: np.ndarray, x: np.ndarray, labels, config: NetConfig, return_logits=False):
    """Mean softmax cross-entropy over the batch and its gradient in ``theta``.

    Computation runs in ``theta``'s dtype; the gradient has the same dtype.
    """
    x = _check_input(x, config).astype(theta.dtype, copy=False)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (x.shape[0],):
        raise ShapeMismatch("need exactly one label per sample")
    if labels.size and (labels.min() < 0 or labels.max() >= N_CLASSES):
        raise ValueError("labels must be 0 (natural) or 1 (recolored)")
    n = x.shape[0]
    logits, (p, cache, feat, last_shape) = _forward(theta, x, config, True)
    z = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsumexp - z[np.arange(n), labels]))

    grads = {}
    dlogits = softmax(logits)
    dlogits[np.arange(n), labels] -= 1.0
    dlogits /= n
    grads["fc.weight"] = dlogits.T @ feat
    grads["fc.bias"] = dlogits.sum(axis=0)
    dfeat = dlogits @ p["fc.weight"]
    _, hh, ww, _ = last_shape
    dh = np.broadcast_to(dfeat[:, None, None, :] / (hh * ww), last_shape)
    for i in reversed(range(len(config.blocks))):
        cols, x_shape, active, arg, a_shape, skip = cache[i]
        dz = _maxpool_backward(dh, arg, a_shape) * active
        dx, grads[f"conv{i}.weight"], grads[f"conv{i}.bias"] = _conv_backward(
            dz, cols, p[f"conv{i}.weight"], x_shape, need_dx=i > 0
        )
        if skip and i > 0:
            dx = dx + dz
        dh = dx

    g = np.empty_like(theta)
    for s in param_layout(config):
        g[s.slice] = grads[s.name].ravel()
    if return_logits:
        return loss, g, logits
    return loss, g
