"""Flat ``key = value`` configuration files for training.

Blank lines and ``#`` comments are ignored; unknown keys are errors. Keys
cover every :class:`TrainConfig` field, the network shape (``blocks``,
``residual``, ``input_planes``, ``input_side``) and, for manifest training,
the input layout (``pool``, ``directions``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .classifier.train import TrainConfig
from .exceptions import InputError

_TRAIN_FIELDS = {f.name: f.type for f in fields(TrainConfig)}
_INT_KEYS = {"cycle", "batch_size", "max_epochs", "patience", "seed", "pool", "input_planes", "input_side"}
_EXTRA_KEYS = {"blocks", "residual", "input_planes", "input_side", "pool", "directions"}


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    blocks: tuple = (16, 32, 64)
    residual: bool = False
    input_planes: int | None = None
    input_side: int | None = None
    pool: int = 4
    directions: str = "all"


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config(text: str) -> RunConfig:
    train_kwargs = {}
    extra = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TRAIN_FIELDS and key not in _EXTRA_KEYS:
            raise InputError(f"line {lineno}: unknown key {key!r}")
        if key in train_kwargs or key in extra:
            raise InputError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key == "blocks":
                parsed = tuple(int(v) for v in value.replace(",", " ").split())
            elif key == "residual":
                parsed = _parse_bool(value)
            elif key in ("directions", "decay_mode"):
                parsed = value.lower()
            elif key in _INT_KEYS:
                parsed = int(value)
            else:
                parsed = float(value)
        except ValueError as exc:
            raise InputError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
        if key in _TRAIN_FIELDS:
            train_kwargs[key] = parsed
        else:
            extra[key] = parsed
    try:
        tc = TrainConfig(**train_kwargs)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return RunConfig(train=tc, **extra)


def read_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def format_config(rc: RunConfig) -> str:
    lines = [f"{k} = {getattr(rc.train, k)}" for k in _TRAIN_FIELDS]
    lines.append("blocks = " + ",".join(str(b) for b in rc.blocks))
    lines.append(f"residual = {str(rc.residual).lower()}")
    lines.append(f"pool = {rc.pool}")
    lines.append(f"directions = {rc.directions}")
    for k in ("input_planes", "input_side"):
        if getattr(rc, k) is not None:
            lines.append(f"{k} = {getattr(rc, k)}")
    return "\n".join(lines) + "\n"
