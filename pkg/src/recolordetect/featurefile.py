"""Binary feature file (``RCSC``) holding pooled co-occurrence tensors.

Layout, all little-endian::

    magic      4s   b"RCSC"
    version    u16
    n_planes   u8
    order      n_planes * u8   (channel * 4 + direction index)
    pool       u8
    count      u32
    records    count * (hash 32s, label u8, n_planes * side * side * f32)

with ``side = 256 / pool``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cooccurrence import BINS, CooccurrenceTensor
from .exceptions import LayoutMismatch, MalformedFile
from .imagecore import DIRECTIONS, Channel

MAGIC = b"RCSC"
VERSION = 1

LABEL_NATURAL = 0
LABEL_RECOLORED = 1
LABEL_UNLABELED = 255

_HEAD = struct.Struct("<4sHB")


def encode_order(order) -> bytes:
    return bytes(int(c) * 4 + d.index for c, d in order)


def decode_order(raw: bytes) -> tuple:
    out = []
    for b in raw:
        c, d = divmod(b, 4)
        if c > 2:
            raise MalformedFile(f"bad plane descriptor byte {b}")
        out.append((Channel(c), DIRECTIONS[d]))
    return tuple(out)


def order_names(order) -> list[str]:
    return [f"{c.name}{d.short}" for c, d in order]


@dataclass(eq=False)
class FeatureSet:
    """Tensors, labels and source hashes sharing one plane order and pool."""

    order: tuple
    pool: int
    X: np.ndarray
    labels: np.ndarray
    hashes: list

    @property
    def side(self) -> int:
        return BINS // self.pool

    def __len__(self):
        return len(self.labels)

    @classmethod
    def from_tensors(cls, tensors, labels) -> "FeatureSet":
        tensors = list(tensors)
        if not tensors:
            raise ValueError("no tensors")
        order, pool = tensors[0].order, tensors[0].pool
        for t in tensors:
            if t.order != order or t.pool != pool:
                raise LayoutMismatch("tensors disagree on plane order or pool factor")
        X = np.stack([t.planes for t in tensors]).astype(np.float32)
        return cls(order, pool, X, np.asarray(labels, dtype=np.uint8), [t.source_id for t in tensors])

    def subset(self, idx) -> "FeatureSet":
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureSet(self.order, self.pool, self.X[idx], self.labels[idx], [self.hashes[i] for i in idx])

    def tensor(self, i: int) -> CooccurrenceTensor:
        return CooccurrenceTensor(self.X[i].astype(np.float64), self.order, self.hashes[i], self.pool)


def to_bytes(fs: FeatureSet) -> bytes:
    n_planes = len(fs.order)
    expected = (len(fs), n_planes, fs.side, fs.side)
    if fs.X.shape != expected:
        raise LayoutMismatch(f"feature array shape {fs.X.shape} != {expected}")
    parts = [
        _HEAD.pack(MAGIC, VERSION, n_planes),
        encode_order(fs.order),
        struct.pack("<BI", fs.pool, len(fs)),
    ]
    X = np.ascontiguousarray(fs.X, dtype="<f4")
    for i in range(len(fs)):
        h = fs.hashes[i]
        if len(h) != 32:
            raise ValueError("source hash must be 32 bytes")
        parts.append(h)
        parts.append(struct.pack("<B", int(fs.labels[i])))
        parts.append(X[i].tobytes())
    return b"".join(parts)


def from_bytes(data: bytes) -> FeatureSet:
    if len(data) < _HEAD.size or data[:4] != MAGIC:
        raise MalformedFile("not an RCSC feature file")
    magic, version, n_planes = _HEAD.unpack_from(data, 0)
    if version != VERSION:
        raise LayoutMismatch(f"unsupported feature file version {version}")
    pos = _HEAD.size
    if len(data) < pos + n_planes + 5:
        raise MalformedFile("truncated feature file header")
    order = decode_order(data[pos : pos + n_planes])
    pos += n_planes
    pool, count = struct.unpack_from("<BI", data, pos)
    pos += 5
    if pool == 0 or BINS % pool:
        raise MalformedFile(f"bad pool factor {pool}")
    side = BINS // pool
    n_floats = n_planes * side * side
    rec_size = 33 + 4 * n_floats
    if len(data) != pos + count * rec_size:
        raise MalformedFile("feature file length does not match its header")
    hashes, labels = [], np.empty(count, dtype=np.uint8)
    X = np.empty((count, n_planes, side, side), dtype=np.float32)
    for i in range(count):
        hashes.append(bytes(data[pos : pos + 32]))
        labels[i] = data[pos + 32]
        X[i] = np.frombuffer(data, dtype="<f4", count=n_floats, offset=pos + 33).reshape(n_planes, side, side)
        pos += rec_size
    if not np.isin(labels, (LABEL_NATURAL, LABEL_RECOLORED, LABEL_UNLABELED)).all():
        raise MalformedFile("label byte must be 0, 1 or 255")
    return FeatureSet(order, pool, X, labels, hashes)


def write_features(fs: FeatureSet, path) -> None:
    Path(path).write_bytes(to_bytes(fs))


def read_features(path) -> FeatureSet:
    return from_bytes(Path(path).read_bytes())
