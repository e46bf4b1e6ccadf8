import json

import numpy as np
import pytest

from conftest import smooth_image
from recolordetect.exceptions import BadParameters, CorpusTooSmall, MalformedFile
from recolordetect.imagecore import RgbImage, read_image, write_png
from recolordetect.recolor import (
    DatasetManifest,
    RecolorMethod,
    apply_method,
    image_id,
    lab_to_rgb,
    reinhard_float,
    reinhard_transfer,
    rgb_to_lab,
    synthesize_dataset,
)


def test_lab_roundtrip_exact(rng):
    rgb = rng.uniform(0, 255, size=(500, 3))
    rgb[:5] = 0.0
    assert np.allclose(lab_to_rgb(rgb_to_lab(rgb)), rgb, atol=1e-9)


def test_lab_of_gray_is_achromatic():
    lab = rgb_to_lab(np.array([[80.0, 80.0, 80.0]]))
    # The LMS rows of the transform do not sum to exactly one, so gray is
    # only nearly achromatic.
    assert abs(lab[0, 2]) < 0.01


def test_identity_when_reference_is_source(rng):
    for _ in range(5):
        img = smooth_image(rng, 24, 20)
        out = reinhard_transfer(img, img)
        assert np.abs(out.data.astype(int) - img.data.astype(int)).max() <= 1


def test_statistics_matched_before_quantization(rng):
    for _ in range(10):
        src, ref = smooth_image(rng), smooth_image(rng, 40, 28)
        out = rgb_to_lab(reinhard_float(src, ref).reshape(-1, 3))
        lab_r = rgb_to_lab(ref.data.reshape(-1, 3).astype(np.float64))
        for k in range(3):
            for got, want in ((out[:, k].mean(), lab_r[:, k].mean()), (out[:, k].std(), lab_r[:, k].std())):
                assert abs(got - want) <= 0.02 * abs(want) + 1e-12


def test_gray_source_gets_color(rng):
    g = np.repeat(smooth_image(rng).data[:, :, :1], 3, axis=2)
    ref = np.zeros((16, 16, 3), np.uint8)
    ref[..., 0] = rng.integers(150, 250, (16, 16))
    ref[..., 1] = rng.integers(40, 120, (16, 16))
    ref[..., 2] = rng.integers(0, 60, (16, 16))
    out = reinhard_transfer(RgbImage(g), RgbImage(ref)).data.astype(float)
    means = out.reshape(-1, 3).mean(axis=0)
    assert means.max() - means.min() > 1


def test_zero_std_channel_gets_reference_mean():
    src = RgbImage(np.full((6, 6, 3), 100, np.uint8))
    ref = RgbImage(np.tile(np.array([200, 50, 20], np.uint8), (6, 6, 1)))
    out = reinhard_transfer(src, ref)
    assert np.abs(out.data.astype(int) - ref.data.astype(int)).max() <= 1


def test_affine_identity_and_clamp(rng):
    img = smooth_image(rng)
    same = apply_method(img, RecolorMethod("affine", gains=(1, 1, 1), biases=(0, 0, 0)))
    assert same == img
    bright = apply_method(img, RecolorMethod("affine", gains=(1.4, 1.4, 1.4), biases=(30, 30, 30)))
    expect = np.clip(np.rint(img.data * 1.4 + 30), 0, 255).astype(np.uint8)
    assert np.array_equal(bright.data, expect)


def test_hue_periodicity(rng):
    img = smooth_image(rng)
    near = apply_method(img, RecolorMethod("hue", angle=360 - 1e-6))
    assert np.abs(near.data.astype(int) - img.data.astype(int)).max() <= 2
    m = RecolorMethod("hue", angle=120.0)
    out = apply_method(apply_method(apply_method(img, m), m), m)
    assert np.abs(out.data.astype(int) - img.data.astype(int)).max() <= 3


def test_hue_keeps_value(rng):
    img = smooth_image(rng)
    out = apply_method(img, RecolorMethod("hue", angle=77.0))
    assert np.abs(out.data.max(axis=2).astype(int) - img.data.max(axis=2).astype(int)).max() <= 1
    assert not np.array_equal(out.data, img.data)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"kind": "sepia"},
        {"kind": "reinhard"},
        {"kind": "affine", "gains": (0.5, 1, 1), "biases": (0, 0, 0)},
        {"kind": "affine", "gains": (1, 1, 1), "biases": (0, 31, 0)},
        {"kind": "affine", "gains": (1, 1), "biases": (0, 0)},
        {"kind": "hue", "angle": 0.0},
        {"kind": "hue", "angle": 360.0},
        {"kind": "hue"},
    ],
)
def test_bad_parameters(kwargs):
    with pytest.raises(BadParameters):
        RecolorMethod(**kwargs)


def test_sampled_parameters_in_range():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = RecolorMethod.sample("affine", rng)
        assert all(0.6 <= g <= 1.4 for g in a.gains) and all(-30 <= b <= 30 for b in a.biases)
        h = RecolorMethod.sample("hue", rng)
        assert 20 <= h.angle <= 340


def _corpus(tmp_path, rng, n, size=16):
    d = tmp_path / "nat"
    d.mkdir()
    paths = []
    for i in range(n):
        p = d / f"n{i:03d}.png"
        write_png(smooth_image(rng, size, size), p)
        paths.append(p)
    return paths


def test_synth_bookkeeping(tmp_path, rng):
    paths = _corpus(tmp_path, rng, 10)
    m = synthesize_dataset(paths, ["reinhard"], (0.8, 0.2, 0.0), seed=3, out_dir=tmp_path / "rec", manifest_dir=tmp_path)
    nat = [e for e in m.entries if e.label == "natural"]
    rec = [e for e in m.entries if e.label == "recolored"]
    assert len(nat) == 10 and 1 <= len(rec) <= 10
    nat_ids = {e.source_id for e in nat}
    assert all(e.source_id in nat_ids for e in rec)
    refs = {e.reference_id for e in rec}
    assert not refs & {e.source_id for e in rec}
    assert m.leaks() == set()
    assert {e.split for e in m.entries} <= {"train", "val"}
    assert len(m.split("train")) > 0 and len(m.split("val")) > 0
    for e in m.entries:
        assert m.resolve(e).is_file()
        if e.label == "natural":
            assert e.source_id == image_id(read_image(m.resolve(e)))


def test_synth_deterministic_and_roundtrip(tmp_path, rng):
    paths = _corpus(tmp_path, rng, 12)
    a = synthesize_dataset(paths, ["affine", "hue"], (0.5, 0.25, 0.25), seed=7, out_dir=tmp_path / "a", manifest_dir=tmp_path)
    bytes_a = {p.name: p.read_bytes() for p in sorted((tmp_path / "a").iterdir())}
    b = synthesize_dataset(paths, ["affine", "hue"], (0.5, 0.25, 0.25), seed=7, out_dir=tmp_path / "b", manifest_dir=tmp_path)
    bytes_b = {p.name: p.read_bytes() for p in sorted((tmp_path / "b").iterdir())}
    assert bytes_a == bytes_b
    ja = a.to_json()
    assert ja == b.to_json().replace('"b/', '"a/')
    assert {e.generator for e in a.entries if e.label == "recolored"} == {"affine", "hue"}
    a.write(tmp_path / "m.json")
    back = DatasetManifest.read(tmp_path / "m.json")
    assert back.to_json() == ja and back.digest() == a.digest()
    assert all(back.resolve(e).is_file() for e in back.entries)


def test_synth_no_reuse_audit(tmp_path, rng):
    paths = _corpus(tmp_path, rng, 200, size=8)
    m = synthesize_dataset(paths, ["reinhard"], (0.6, 0.2, 0.2), seed=1, out_dir=tmp_path / "rec")
    rec = [e for e in m.entries if e.label == "recolored"]
    sources = [e.source_id for e in rec]
    assert len(sources) == len(set(sources))
    assert not {e.reference_id for e in rec} & set(sources)
    assert m.leaks() == set()
    for split in ("train", "val", "test"):
        assert m.split(split)


def test_synth_errors(tmp_path, rng):
    paths = _corpus(tmp_path, rng, 9)
    with pytest.raises(CorpusTooSmall):
        synthesize_dataset(paths, ["hue"], seed=0, out_dir=tmp_path / "x")
    paths = paths + [tmp_path / "nat" / "n000.png"]
    with pytest.raises(BadParameters):
        synthesize_dataset(paths, ["hue"], (0.5, 0.5, 0.5), seed=0, out_dir=tmp_path / "x")
    with pytest.raises(BadParameters):
        synthesize_dataset(paths, ["blur"], seed=0, out_dir=tmp_path / "x")


def test_manifest_malformed(tmp_path):
    (tmp_path / "m.json").write_text("{nope")
    with pytest.raises(MalformedFile):
        DatasetManifest.read(tmp_path / "m.json")
    (tmp_path / "m.json").write_text(json.dumps({"entries": [{"path": "a"}], "seed": 0}))
    with pytest.raises(MalformedFile):
        DatasetManifest.read(tmp_path / "m.json")
