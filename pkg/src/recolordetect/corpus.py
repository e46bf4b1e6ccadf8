"""Desk corpus of natural photographs.

No photo collection ships with the package, so the bundled color sample
photos of scikit-image and scikit-learn (plus matplotlib's, when installed)
are cut into random crops. Crops are written losslessly as PNG.
"""

from __future__ import annotations

import importlib.util
from pathlib import Path

import numpy as np
from PIL import Image

from .imagecore import RgbImage, write_png

SKIMAGE_PHOTOS = (
    "astronaut.png",
    "chelsea.png",
    "coffee.png",
    "hubble_deep_field.jpg",
    "ihc.png",
    "motorcycle_left.png",
    "motorcycle_right.png",
    "retina.jpg",
    "rocket.jpg",
)


def _package_dir(name: str) -> Path | None:
    spec = importlib.util.find_spec(name)
    if spec is None or spec.origin is None:
        return None
    return Path(spec.origin).parent


def bundled_photo_paths() -> list[Path]:
    paths = []
    sk = _package_dir("skimage")
    if sk is not None:
        paths += [sk / "data" / n for n in SKIMAGE_PHOTOS]
    skl = _package_dir("sklearn")
    if skl is not None:
        paths += [skl / "datasets" / "images" / n for n in ("china.jpg", "flower.jpg")]
    mpl = _package_dir("matplotlib")
    if mpl is not None:
        paths.append(mpl / "mpl-data" / "sample_data" / "grace_hopper.jpg")
    return [p for p in paths if p.is_file()]


def load_photo(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def iter_crops(photos, count: int, size: int = 128, seed: int = 0):
    """Yield ``count`` crops of ``size`` x ``size``; photo and offset drawn uniformly."""
    photos = [p for p in photos if p.shape[0] >= size and p.shape[1] >= size]
    if not photos:
        raise ValueError(f"no photo is at least {size}x{size}")
    rng = np.random.default_rng(seed)
    for _ in range(count):
        p = photos[rng.integers(len(photos))]
        y = rng.integers(p.shape[0] - size + 1)
        x = rng.integers(p.shape[1] - size + 1)
        yield RgbImage(np.ascontiguousarray(p[y : y + size, x : x + size]))


def random_crops(photos, count: int, size: int = 128, seed: int = 0) -> list[RgbImage]:
    return list(iter_crops(photos, count, size, seed))


def make_crop_corpus(out_dir, count: int, size: int = 128, seed: int = 0, sources=None) -> list[Path]:
    sources = bundled_photo_paths() if sources is None else [Path(s) for s in sources]
    crops = random_crops([load_photo(p) for p in sources], count, size, seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(count)))
    paths = []
    for i, img in enumerate(crops):
        path = out_dir / f"crop_{i:0{width}d}.png"
        write_png(img, path)
        paths.append(path)
    return paths
