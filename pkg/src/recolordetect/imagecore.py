"""Raster decoding, channel planes and the pixel-adjacency directions.

Coordinates: ``x`` is the column index growing rightward, ``y`` the row index
growing downward. A direction offset ``(dx, dy)`` pairs pixel ``(x, y)`` with
``(x + dx, y + dy)``, so the anti-diagonal ``(1, -1)`` looks at the upper-right
neighbour.
"""

from __future__ import annotations

import enum
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .exceptions import MalformedFile, TooSmall, UnsupportedDepth

__all__ = [
    "Channel",
    "Direction",
    "ImagePlane",
    "RgbImage",
    "decode_image",
    "encode_png",
    "encode_ppm",
    "merge_channels",
    "pair_views",
    "read_image",
    "split_channels",
    "write_png",
]


class Channel(enum.IntEnum):
    R = 0
    G = 1
    B = 2


class Direction(enum.Enum):
    """The four neighbour offsets; the other four are their negations."""

    HORIZONTAL = (1, 0)
    VERTICAL = (0, 1)
    DIAGONAL = (1, 1)
    ANTI_DIAGONAL = (1, -1)

    @property
    def offset(self) -> tuple[int, int]:
        return self.value

    @property
    def short(self) -> str:
        return _DIRECTION_SHORT[self]

    @property
    def index(self) -> int:
        return _DIRECTION_ORDER.index(self)


_DIRECTION_ORDER = (
    Direction.HORIZONTAL,
    Direction.VERTICAL,
    Direction.DIAGONAL,
    Direction.ANTI_DIAGONAL,
)
_DIRECTION_SHORT = {
    Direction.HORIZONTAL: "H",
    Direction.VERTICAL: "V",
    Direction.DIAGONAL: "D",
    Direction.ANTI_DIAGONAL: "AD",
}
DIRECTIONS = _DIRECTION_ORDER


@dataclass(frozen=True, eq=False)
class RgbImage:
    """8-bit RGB raster held as a read-only ``(h, w, 3)`` uint8 array."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected an (h, w, 3) array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValueError(f"expected uint8 samples, got {arr.dtype}")
        h, w = arr.shape[:2]
        if w < 2 or h < 2:
            raise TooSmall(f"image is {w}x{h}; both sides must be at least 2")
        arr = np.array(arr, copy=True, order="C")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_interleaved(cls, width: int, height: int, samples: bytes) -> "RgbImage":
        if len(samples) != 3 * width * height:
            raise MalformedFile(
                f"expected {3 * width * height} samples, got {len(samples)}"
            )
        arr = np.frombuffer(samples, dtype=np.uint8).reshape(height, width, 3)
        return cls(arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def tobytes(self) -> bytes:
        return self.data.tobytes()

    def content_hash(self) -> bytes:
        """SHA-256 over the dimensions and the interleaved samples."""
        h = hashlib.sha256()
        h.update(self.width.to_bytes(4, "little"))
        h.update(self.height.to_bytes(4, "little"))
        h.update(self.data.tobytes())
        return h.digest()

    def __eq__(self, other):
        if not isinstance(other, RgbImage):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ImagePlane:
    """One color channel of an :class:`RgbImage`, shape ``(h, w)``."""

    channel: Channel
    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D plane, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            # Planes built by hand (e.g. in tests) may arrive as ints.
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("plane samples must lie in [0, 255]")
            arr = arr.astype(np.uint8)
        arr = np.array(arr, copy=True, order="C")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "channel", Channel(self.channel))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


def pair_views(samples: np.ndarray, offset) -> tuple[np.ndarray, np.ndarray]:
    """Aligned views ``(first, second)`` over every in-bounds pixel pair.

    ``first[k] = V(x, y)`` and ``second[k] = V(x + dx, y + dy)``; pairs whose
    partner falls outside the plane are skipped. Works for negated offsets.
    """
    dx, dy = offset
    h, w = samples.shape
    if abs(dx) >= w or abs(dy) >= h:
        return samples[:0, :0], samples[:0, :0]
    first = samples[max(0, -dy) : h - max(0, dy), max(0, -dx) : w - max(0, dx)]
    second = samples[max(0, dy) : h - max(0, -dy), max(0, dx) : w - max(0, -dx)]
    return first, second


def split_channels(img: RgbImage) -> tuple[ImagePlane, ImagePlane, ImagePlane]:
    return tuple(ImagePlane(c, img.data[:, :, int(c)]) for c in Channel)


def merge_channels(planes) -> RgbImage:
    by_channel = {p.channel: p.samples for p in planes}
    if set(by_channel) != set(Channel):
        raise ValueError("need exactly one plane per channel R, G, B")
    return RgbImage(np.stack([by_channel[c] for c in Channel], axis=-1))


def _decode_ppm(data: bytes) -> RgbImage:
    # Header: "P6" <ws> width <ws> height <ws> maxval <single ws> raster
    fields = []
    pos = 2
    n = len(data)
    while len(fields) < 3:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise MalformedFile(f"bad PPM header token {token!r}")
        fields.append(int(token))
    if pos >= n or not data[pos : pos + 1].isspace():
        raise MalformedFile("truncated PPM header")
    pos += 1
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedDepth(f"PPM maxval {maxval}; only 8-bit (255) is supported")
    if width < 2 or height < 2:
        raise TooSmall(f"image is {width}x{height}; both sides must be at least 2")
    raster = data[pos : pos + 3 * width * height]
    if len(raster) != 3 * width * height:
        raise MalformedFile("truncated PPM raster")
    return RgbImage.from_interleaved(width, height, raster)


_EIGHT_BIT_MODES = {"RGB", "RGBA", "L", "LA", "P", "1"}


def _decode_png(data: bytes) -> RgbImage:
    # Pillow silently narrows 16-bit RGB to 8 bits, so check IHDR ourselves.
    if len(data) >= 26 and data[12:16] == b"IHDR" and data[24] == 16:
        raise UnsupportedDepth("16-bit PNG; only 8-bit samples are supported")
    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except Exception as exc:
        raise MalformedFile(f"cannot decode PNG: {exc}") from exc
    if im.mode not in _EIGHT_BIT_MODES:
        raise UnsupportedDepth(f"PNG mode {im.mode!r} is not 8-bit")
    if im.mode in ("L", "LA", "1"):
        gray = np.asarray(im.convert("L"))
        arr = np.repeat(gray[:, :, None], 3, axis=2)
    else:
        arr = np.asarray(im.convert("RGB"))
    return RgbImage(arr)


def decode_image(data: bytes) -> RgbImage:
    """Decode a PNG or binary PPM (P6) file into an :class:`RgbImage`.

    Grayscale sources are replicated into three identical channels.
    """
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(data)
    if data[:2] == b"P6":
        return _decode_ppm(data)
    raise MalformedFile("not a PNG or binary PPM (P6) file")


def read_image(path) -> RgbImage:
    return decode_image(Path(path).read_bytes())


def encode_ppm(img: RgbImage) -> bytes:
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.tobytes()


def encode_png(img: RgbImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.data).save(buf, format="PNG", optimize=False)
    return buf.getvalue()


def write_png(img: RgbImage, path) -> None:
    Path(path).write_bytes(encode_png(img))
