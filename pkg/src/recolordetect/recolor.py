"""Recoloring operators and recolored-dataset synthesis.

``reinhard_transfer`` is the classic statistical color transfer: both
images go through RGB -> LMS -> log -> l-alpha-beta, each source
channel is shifted and scaled to the reference channel's mean and standard
deviation, and the result is mapped back and clamped to [0, 255].
``ChannelAffine`` and ``HueRotate`` are deliberately different families kept
out of training to probe generalization.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import BadParameters, CorpusTooSmall, MalformedFile
from .imagecore import RgbImage, read_image, write_png

log = logging.getLogger(__name__)

__all__ = [
    "DatasetManifest",
    "ManifestEntry",
    "RecolorMethod",
    "apply_method",
    "image_id",
    "lab_to_rgb",
    "reinhard_transfer",
    "rgb_to_lab",
    "synthesize_dataset",
]

_RGB2LMS = np.array(
    [
        [0.3811, 0.5783, 0.0402],
        [0.1967, 0.7244, 0.0782],
        [0.0241, 0.1288, 0.8444],
    ]
)
_LMS2RGB = np.linalg.inv(_RGB2LMS)
_LOGLMS2LAB = np.diag([1 / np.sqrt(3), 1 / np.sqrt(6), 1 / np.sqrt(2)]) @ np.array(
    [[1.0, 1.0, 1.0], [1.0, 1.0, -2.0], [1.0, -1.0, 0.0]]
)
_LAB2LOGLMS = np.linalg.inv(_LOGLMS2LAB)


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """``(..., 3)`` RGB on the 0-255 scale to l-alpha-beta.

    The log is taken of ``LMS + 1`` so black pixels stay finite and the map
    is exactly invertible.
    """
    lms = np.asarray(rgb, dtype=np.float64) @ _RGB2LMS.T
    return np.log10(lms + 1.0) @ _LOGLMS2LAB.T


def lab_to_rgb(lab: np.ndarray) -> np.ndarray:
    lms = 10.0 ** (np.asarray(lab, dtype=np.float64) @ _LAB2LOGLMS.T) - 1.0
    return lms @ _LMS2RGB.T


def _lab_stats(img: RgbImage):
    lab = rgb_to_lab(img.data.reshape(-1, 3))
    return lab, lab.mean(axis=0), lab.std(axis=0)


def reinhard_float(source: RgbImage, reference: RgbImage) -> np.ndarray:
    """Transferred image as unclamped float RGB, shape ``(h, w, 3)``."""
    lab, mu_s, sd_s = _lab_stats(source)
    _, mu_r, sd_r = _lab_stats(reference)
    out = np.empty_like(lab)
    for k in range(3):
        if sd_s[k] > 0:
            out[:, k] = (lab[:, k] - mu_s[k]) * (sd_r[k] / sd_s[k]) + mu_r[k]
        else:
            out[:, k] = mu_r[k]
    return lab_to_rgb(out).reshape(source.data.shape)


def _quantize(rgb: np.ndarray, what: str) -> RgbImage:
    overflow = float(np.mean((rgb < -0.5) | (rgb > 255.5)))
    if overflow:
        log.debug("%s: %.4f of samples clamped", what, overflow)
    return RgbImage(np.clip(np.rint(rgb), 0, 255).astype(np.uint8))


def reinhard_transfer(source: RgbImage, reference: RgbImage) -> RgbImage:
    return _quantize(reinhard_float(source, reference), "reinhard")


def _hue_rotate(img: RgbImage, angle: float) -> RgbImage:
    from skimage.color import hsv2rgb, rgb2hsv

    hsv = rgb2hsv(img.data)
    hsv[..., 0] = (hsv[..., 0] + angle / 360.0) % 1.0
    return _quantize(hsv2rgb(hsv) * 255.0, "hue")


GAIN_RANGE = (0.6, 1.4)
BIAS_RANGE = (-30.0, 30.0)
# Sampled hue angles stay away from the identity at 0/360.
SAMPLED_ANGLE_RANGE = (20.0, 340.0)

METHOD_KINDS = ("reinhard", "affine", "hue")


@dataclass(frozen=True, eq=False)
class RecolorMethod:
    """One recoloring operation with concrete parameters.

    kind is ``"reinhard"`` (needs ``reference``), ``"affine"`` (per-channel
    ``gains``/``biases``) or ``"hue"`` (``angle`` in degrees).
    """

    kind: str
    reference: RgbImage | None = None
    gains: tuple | None = None
    biases: tuple | None = None
    angle: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise BadParameters(f"unknown recoloring method {self.kind!r}")
        if self.kind == "reinhard":
            if not isinstance(self.reference, RgbImage):
                raise BadParameters("reinhard transfer needs a reference RgbImage")
        elif self.kind == "affine":
            if self.gains is None or self.biases is None or len(self.gains) != 3 or len(self.biases) != 3:
                raise BadParameters("affine needs three gains and three biases")
            if any(not GAIN_RANGE[0] <= g <= GAIN_RANGE[1] for g in self.gains):
                raise BadParameters(f"gains must lie in {GAIN_RANGE}")
            if any(not BIAS_RANGE[0] <= b <= BIAS_RANGE[1] for b in self.biases):
                raise BadParameters(f"biases must lie in {BIAS_RANGE}")
        else:
            if self.angle is None or not 0.0 < self.angle < 360.0:
                raise BadParameters("hue angle must lie in (0, 360)")

    @classmethod
    def sample(cls, kind: str, rng: np.random.Generator, reference=None) -> "RecolorMethod":
        seed = int(rng.integers(2**31))
        if kind == "affine":
            return cls(
                kind,
                gains=tuple(float(g) for g in rng.uniform(*GAIN_RANGE, size=3)),
                biases=tuple(float(b) for b in rng.uniform(*BIAS_RANGE, size=3)),
                seed=seed,
            )
        if kind == "hue":
            return cls(kind, angle=float(rng.uniform(*SAMPLED_ANGLE_RANGE)), seed=seed)
        return cls(kind, reference=reference, seed=seed)

    def describe(self) -> dict:
        if self.kind == "affine":
            return {"gains": list(self.gains), "biases": list(self.biases)}
        if self.kind == "hue":
            return {"angle": self.angle}
        return {}


def apply_method(img: RgbImage, m: RecolorMethod) -> RgbImage:
    if m.kind == "reinhard":
        return reinhard_transfer(img, m.reference)
    if m.kind == "affine":
        out = img.data.astype(np.float64) * np.asarray(m.gains) + np.asarray(m.biases)
        return _quantize(out, "affine")
    return _hue_rotate(img, m.angle)


def image_id(img: RgbImage) -> str:
    return img.content_hash().hex()[:16]


@dataclass
class ManifestEntry:
    path: str
    label: str
    generator: str
    source_id: str
    split: str
    reference_id: str | None = None
    params: dict = field(default_factory=dict)


SPLITS = ("train", "val", "test")


@dataclass
class DatasetManifest:
    """Labeled file listing; paths are relative to ``root`` when loaded."""

    entries: list
    seed: int
    methods: list = field(default_factory=list)
    ratios: list = field(default_factory=lambda: [0.8, 0.2, 0.0])
    root: Path | None = None

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "seed": self.seed,
            "methods": list(self.methods),
            "ratios": list(self.ratios),
            "entries": [asdict(e) for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def write(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, d: dict, root=None) -> "DatasetManifest":
        try:
            entries = [ManifestEntry(**e) for e in d["entries"]]
            return cls(entries, int(d["seed"]), list(d.get("methods", [])), list(d.get("ratios", [])), root)
        except (KeyError, TypeError) as exc:
            raise MalformedFile(f"bad manifest: {exc}") from exc

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise MalformedFile(f"manifest is not JSON: {exc}") from exc
        return cls.from_dict(d, root=path.parent)

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def split(self, name: str) -> list:
        return [e for e in self.entries if e.split == name]

    def leaks(self) -> set:
        """Source ids that occur in more than one split."""
        seen: dict[str, set] = {}
        for e in self.entries:
            seen.setdefault(e.source_id, set()).add(e.split)
        return {k for k, v in seen.items() if len(v) > 1}


def _assign_splits(ids, ratios, rng) -> dict:
    ids = list(ids)
    perm = rng.permutation(len(ids))
    n = len(ids)
    n_train = int(round(ratios[0] * n))
    n_val = int(round(ratios[1] * n))
    if ratios[2] == 0:
        n_val = n - n_train
    out = {}
    for rank, i in enumerate(perm):
        if rank < n_train:
            out[ids[i]] = "train"
        elif rank < n_train + n_val:
            out[ids[i]] = "val"
        else:
            out[ids[i]] = "test"
    return out


def synthesize_dataset(
    naturals,
    methods=("reinhard",),
    ratios=(0.8, 0.2, 0.0),
    seed: int = 0,
    out_dir=None,
    reference_fraction: float = 0.2,
    manifest_dir=None,
) -> DatasetManifest:
    """Recolor a corpus of natural images and describe the result.

    Every natural is listed; each source is recolored at most once by one of
    ``methods`` (cycled in a seeded order). Reinhard references come from a
    held-back pool of naturals that are never themselves recolored. A natural
    and its derivative always share a split.

    ``naturals`` is a sequence of image paths. Recolored PNGs go to
    ``out_dir``; manifest paths are relative to ``manifest_dir`` (defaults to
    ``out_dir``).
    """
    paths = [Path(p) for p in naturals]
    if len(paths) < 10:
        raise CorpusTooSmall(f"need at least 10 natural images, got {len(paths)}")
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise BadParameters("split ratios must be three non-negative numbers summing to 1")
    methods = list(methods)
    for m in methods:
        if m not in METHOD_KINDS:
            raise BadParameters(f"unknown recoloring method {m!r}")
    if out_dir is None:
        raise ValueError("out_dir is required")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_dir = Path(manifest_dir) if manifest_dir is not None else out_dir

    rng = np.random.default_rng(seed)
    images = [read_image(p) for p in paths]
    ids = [image_id(im) for im in images]

    order = [int(i) for i in rng.permutation(len(paths))]
    if "reinhard" in methods:
        n_ref = max(1, int(round(reference_fraction * len(paths))))
        refs, sources = order[:n_ref], order[n_ref:]
    else:
        refs, sources = [], order

    split_of = _assign_splits(sorted(set(ids)), ratios, rng)

    def rel(p: Path) -> str:
        return os.path.relpath(p.resolve(), manifest_dir.resolve())

    entries = [
        ManifestEntry(rel(p), "natural", "natural", sid, split_of[sid])
        for p, sid in zip(paths, ids)
    ]
    used = set()
    for k, i in enumerate(sources):
        sid = ids[i]
        if sid in used:
            continue
        used.add(sid)
        kind = methods[k % len(methods)]
        ref_id = None
        if kind == "reinhard":
            j = refs[int(rng.integers(len(refs)))]
            m = RecolorMethod.sample(kind, rng, reference=images[j])
            ref_id = ids[j]
        else:
            m = RecolorMethod.sample(kind, rng)
        out = apply_method(images[i], m)
        out_path = out_dir / f"{sid}_{kind}.png"
        write_png(out, out_path)
        entries.append(
            ManifestEntry(rel(out_path), "recolored", kind, sid, split_of[sid], ref_id, m.describe())
        )
    return DatasetManifest(entries, int(seed), methods, list(ratios), root=manifest_dir)
