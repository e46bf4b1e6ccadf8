import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import smooth_image
from recolordetect.cli import main
from recolordetect.featurefile import read_features
from recolordetect.imagecore import RgbImage, read_image, write_png


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(11)
    (root / "nat").mkdir()
    for i in range(20):
        write_png(smooth_image(rng, 32, 32), root / "nat" / f"{i:02d}.png")
    (root / "quick.cfg").write_text(
        "initial_lr = 3e-3\nbatch_size = 8\nmax_epochs = 3\npatience = 2\nblocks = 4,4\npool = 8\n"
    )
    return root


def run(*args):
    return main([str(a) for a in args])


def test_extract(workspace):
    out = workspace / "f.bin"
    assert run("extract", "--input", workspace / "nat", "--out", out, "--pool", 8, "--directions", "hv") == 0
    fs = read_features(out)
    assert len(fs) == 20 and fs.X.shape[1:] == (6, 32, 32) and set(fs.labels) == {255}


def test_synth_train_eval_predict_ablate(workspace, capsys):
    w = workspace
    assert run("synth", "--input", w / "nat", "--method", "hue", "--out", w / "rec", "--manifest", w / "m.json",
               "--seed", 4, "--ratios", "0.5,0.25,0.25") == 0
    manifest = json.loads((w / "m.json").read_text())
    assert len(manifest["entries"]) > 20
    assert run("train", "--manifest", w / "m.json", "--config", w / "quick.cfg", "--out", w / "model.bin",
               "--log", w / "log.jsonl") == 0
    log = [json.loads(line) for line in (w / "log.jsonl").read_text().splitlines()]
    assert [r["epoch"] for r in log] == list(range(1, len(log) + 1))
    capsys.readouterr()
    assert run("eval", "--model", w / "model.bin", "--manifest", w / "m.json", "--report", w / "eval.json") == 0
    rep = json.loads((w / "eval.json").read_text())
    assert {"accuracy", "auc", "confusion", "per_generator", "dataset_id", "model_id"} <= set(rep)
    assert sum(rep["confusion"].values()) == sum(1 for e in manifest["entries"] if e["split"] == "test")
    capsys.readouterr()
    assert run("predict", "--model", w / "model.bin", "--image", w / "nat" / "00.png") == 0
    label, prob = capsys.readouterr().out.split()
    assert label in ("natural", "recolored") and 0 <= float(prob) <= 1
    assert run("ablate", "--manifest", w / "m.json", "--variants", "all,rgb", "--config", w / "quick.cfg",
               "--out", w / "abl.json") == 0
    table = json.loads((w / "abl.json").read_text())
    assert [r["variant"] for r in table["rows"]] == ["all", "rgb"]


def test_analyze(workspace):
    w = workspace
    rec = w / "shifted"
    rec.mkdir()
    for p in sorted((w / "nat").iterdir()):
        img = read_image(p)
        write_png(RgbImage(np.ascontiguousarray(img.data[:, :, ::-1])), rec / p.name)
    assert run("analyze", "--natural", w / "nat", "--recolored", rec, "--bins", 50, "--report", w / "an.json") == 0
    doc = json.loads((w / "an.json").read_text())
    assert doc["bin_count"] == 50 and len(doc["entries"]) == 12


def test_exit_codes(workspace, tmp_path):
    w = workspace
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"not an image")
    assert run("extract", "--input", bad, "--out", tmp_path / "x.bin") == 2
    assert run("train", "--manifest", w / "m.json", "--config", tmp_path / "nope.cfg", "--out", tmp_path / "m",
               "--log", tmp_path / "l") == 2
    (tmp_path / "c.cfg").write_text("bogus = 1\n")
    assert run("train", "--manifest", w / "m.json", "--config", tmp_path / "c.cfg", "--out", tmp_path / "m",
               "--log", tmp_path / "l") == 2
    # Model trained on 12-plane pool-8 tensors against a 6-plane feature file.
    assert run("eval", "--model", w / "model.bin", "--features", w / "f.bin", "--report", tmp_path / "r.json") == 3
    # All-natural feature file: unlabeled, so training must refuse it.
    assert run("train", "--features", w / "f.bin", "--out", tmp_path / "m", "--log", tmp_path / "l") == 2
    few = tmp_path / "few"
    few.mkdir()
    for i in range(3):
        write_png(smooth_image(np.random.default_rng(i), 8, 8), few / f"{i}.png")
    assert run("synth", "--input", few, "--method", "hue", "--out", tmp_path / "o", "--manifest", tmp_path / "m.json",
               "--seed", 0) == 2


def test_degenerate_exit_code(tmp_path):
    flat = tmp_path / "flat"
    flat.mkdir()
    write_png(RgbImage(np.full((8, 8, 3), 7, np.uint8)), flat / "a.png")
    assert run("analyze", "--natural", flat, "--recolored", flat, "--report", tmp_path / "r.json") == 4


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "recolordetect.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("extract", "analyze", "synth", "train", "eval", "predict", "ablate"):
        assert cmd in out.stdout
