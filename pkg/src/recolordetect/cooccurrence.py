"""Directional co-occurrence matrices and the stacked per-image tensor.

A matrix counts ordered pairs ``(V(x, y), V(x + dx, y + dy))`` over every
in-bounds position and divides by the number of pairs counted. Negating the
offset transposes the matrix, which is why four directions suffice.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import BadFactor, NoPairs
from .imagecore import DIRECTIONS, Channel, Direction, ImagePlane, RgbImage, pair_views, split_channels

__all__ = [
    "BINS",
    "PLANE_ORDER",
    "CooccurrenceMatrix",
    "CooccurrenceTensor",
    "DirectionSubset",
    "cooccurrence",
    "cooccurrence_counts",
    "extract_tensor",
    "plane_order_for",
    "pool_tensor",
    "select_directions",
]

BINS = 256

# Channel-major, direction-minor: (R,H), (R,V), (R,D), (R,AD), (G,H), ...
PLANE_ORDER = tuple((c, d) for c in Channel for d in DIRECTIONS)


class DirectionSubset(enum.Enum):
    ALL = "all"
    HV = "hv"
    DA = "da"

    @property
    def directions(self) -> tuple[Direction, ...]:
        if self is DirectionSubset.HV:
            return (Direction.HORIZONTAL, Direction.VERTICAL)
        if self is DirectionSubset.DA:
            return (Direction.DIAGONAL, Direction.ANTI_DIAGONAL)
        return DIRECTIONS


def plane_order_for(subset) -> tuple:
    subset = DirectionSubset(subset)
    return tuple((c, d) for c, d in PLANE_ORDER if d in subset.directions)


def cooccurrence_counts(samples: np.ndarray, offset) -> np.ndarray:
    """Integer ``(256, 256)`` pair counts for one offset (may be negated)."""
    first, second = pair_views(samples, offset)
    if first.size == 0:
        raise NoPairs("no in-bounds pixel pairs for this offset")
    codes = first.astype(np.int64) * BINS + second.astype(np.int64)
    return np.bincount(codes.ravel(), minlength=BINS * BINS).reshape(BINS, BINS)


@dataclass(frozen=True, eq=False)
class CooccurrenceMatrix:
    channel: Channel
    direction: Direction
    counts: np.ndarray
    pair_count: int

    @property
    def cells(self) -> np.ndarray:
        return self.counts / self.pair_count


def cooccurrence(plane: ImagePlane, direction: Direction) -> CooccurrenceMatrix:
    counts = cooccurrence_counts(plane.samples, direction.offset)
    return CooccurrenceMatrix(
        channel=plane.channel,
        direction=direction,
        counts=counts,
        pair_count=int(counts.sum()),
    )


@dataclass(frozen=True, eq=False)
class CooccurrenceTensor:
    """Normalized co-occurrence planes stacked in a fixed order.

    ``planes`` has shape ``(n_planes, side, side)``; ``side`` is 256 before
    pooling. ``order`` lists the ``(channel, direction)`` of each plane.
    """

    planes: np.ndarray
    order: tuple
    source_id: bytes = b""
    pool: int = 1

    @property
    def side(self) -> int:
        return self.planes.shape[-1]

    def __len__(self):
        return self.planes.shape[0]


def extract_tensor(img: RgbImage) -> CooccurrenceTensor:
    planes = []
    for plane in split_channels(img):
        for d in DIRECTIONS:
            planes.append(cooccurrence(plane, d).cells)
    return CooccurrenceTensor(
        planes=np.stack(planes),
        order=PLANE_ORDER,
        source_id=img.content_hash(),
    )


_FACTORS = (1, 2, 4, 8)


def pool_tensor(t: CooccurrenceTensor, factor: int) -> CooccurrenceTensor:
    """Block-sum pooling by ``factor`` along both value axes; mass is kept."""
    if factor not in _FACTORS or t.side % factor:
        raise BadFactor(f"pool factor must be one of {_FACTORS} and divide {t.side}")
    if factor == 1:
        return t
    n, s = t.planes.shape[0], t.side
    pooled = t.planes.reshape(n, s // factor, factor, s // factor, factor).sum(axis=(2, 4))
    return CooccurrenceTensor(pooled, t.order, t.source_id, t.pool * factor)


def select_directions(t: CooccurrenceTensor, subset) -> CooccurrenceTensor:
    subset = DirectionSubset(subset)
    keep = [i for i, (_, d) in enumerate(t.order) if d in subset.directions]
    return CooccurrenceTensor(
        t.planes[keep], tuple(t.order[i] for i in keep), t.source_id, t.pool
    )
