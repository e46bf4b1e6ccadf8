"""``recolordetect`` command line.

Exit codes: 0 success, 2 bad input, 3 incompatible files, 4 degenerate data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .classifier.net import NetConfig
from .classifier.train import load_checkpoint, save_checkpoint
from .classifier.train import predict as predict_ckpt
from .config import RunConfig, read_config
from .cooccurrence import DirectionSubset
from .corpus import make_crop_corpus
from .estimators import CooccurrenceTransformer, RgbResizer
from .exceptions import InputError, RecolorDetectError
from .featurefile import read_features, write_features
from .imagecore import read_image
from .recolor import DatasetManifest, synthesize_dataset
from .spatialstats import discriminability_report
from .workflows import (
    VARIANTS,
    LabeledArrays,
    ablation_run,
    evaluate,
    extract_features,
    feature_arrays,
    layout_arrays,
    list_images,
    manifest_arrays,
    subset_for_order,
    train_detector,
)

log = logging.getLogger("recolordetect")


def _images(path) -> list:
    paths = list_images(path)
    if not paths:
        raise InputError(f"no images found in {path}")
    return paths


def _ratios(text: str) -> tuple:
    try:
        parts = tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad --ratios {text!r}") from exc
    if len(parts) != 3:
        raise InputError("--ratios needs three comma-separated numbers")
    return parts


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n")


def cmd_extract(args) -> None:
    fs = extract_features(_images(args.input), pool=args.pool, directions=args.directions)
    write_features(fs, args.out)
    log.info("wrote %d records to %s", len(fs), args.out)


def cmd_analyze(args) -> None:
    natural = [read_image(p) for p in _images(args.natural)]
    recolored = [read_image(p) for p in _images(args.recolored)]
    report = discriminability_report(natural, recolored, bin_count=args.bins)
    Path(args.report).write_text(report.to_json(indent=1) + "\n")


def cmd_synth(args) -> None:
    manifest = synthesize_dataset(
        _images(args.input),
        methods=[args.method],
        ratios=_ratios(args.ratios),
        seed=args.seed,
        out_dir=args.out,
        manifest_dir=Path(args.manifest).resolve().parent,
    )
    manifest.write(args.manifest)


def _load_data(args, rc: RunConfig | None = None, layout: dict | None = None) -> LabeledArrays:
    if args.features:
        return feature_arrays(read_features(args.features))
    manifest = DatasetManifest.read(args.manifest)
    if layout is not None:
        return layout_arrays(manifest, layout)
    return manifest_arrays(manifest, pool=rc.pool, directions=rc.directions)


def cmd_train(args) -> None:
    rc = read_config(args.config) if args.config else RunConfig()
    DirectionSubset(rc.directions)
    data = _load_data(args, rc)
    if rc.input_planes is not None and rc.input_planes != data.X.shape[1]:
        raise InputError(f"config input_planes={rc.input_planes} but data has {data.X.shape[1]} planes")
    if rc.input_side is not None and rc.input_side != data.X.shape[2]:
        raise InputError(f"config input_side={rc.input_side} but data side is {data.X.shape[2]}")
    NetConfig(input_planes=data.X.shape[1], input_side=data.X.shape[2], blocks=rc.blocks, residual=rc.residual)
    with open(args.log, "w") as fh:

        def on_epoch(record):
            fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()

        det = train_detector(data, rc.train, rc.blocks, rc.residual, epoch_callback=on_epoch)
    save_checkpoint(det.checkpoint_, args.out)


def cmd_eval(args) -> None:
    ckpt = load_checkpoint(args.model)
    data = _load_data(args, layout=ckpt.layout)
    split = args.split
    if split is None:
        split = "test" if args.manifest and (data.splits == "test").any() else "all"
    if split != "all":
        data = data.split(split)
    report = evaluate(ckpt, data)
    Path(args.report).write_text(report.to_json() + "\n")
    print(f"accuracy {report.accuracy:.4f} auc {report.auc:.4f}")


def cmd_predict(args) -> None:
    ckpt = load_checkpoint(args.model)
    img = read_image(args.image)
    layout = ckpt.layout
    if layout.get("input") == "rgb":
        x = RgbResizer(side=int(layout["side"])).transform_one(img)
    else:
        tf = CooccurrenceTransformer(pool=int(layout["pool"]), directions=subset_for_order(layout["order"]))
        x = tf.transform_one(img).planes
    out = predict_ckpt(ckpt, x[None])[0]
    label = "recolored" if out["label"] == 1 else "natural"
    print(f"{label} {out['probability']:.6f}")


def cmd_ablate(args) -> None:
    rc = read_config(args.config) if args.config else RunConfig()
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    manifest = DatasetManifest.read(args.manifest)
    rows = ablation_run(
        manifest, variants, rc.train, rc.blocks, rc.residual, pool=rc.pool, eval_split=args.split, n_jobs=args.jobs
    )
    _write_json(args.out, {"dataset_id": manifest.digest(), "eval_split": args.split, "jobs": args.jobs, "rows": rows})
    for r in rows:
        print(f"{r['variant']:>4} acc {r['accuracy']:.4f} auc {r['auc']:.4f}")


def cmd_corpus(args) -> None:
    paths = make_crop_corpus(args.out, args.count, size=args.size, seed=args.seed, sources=args.source or None)
    log.info("wrote %d crops to %s", len(paths), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="recolordetect", description="Detect recolored images from co-occurrence statistics.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("extract", help="write co-occurrence tensors of images to a feature file")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--pool", type=int, default=4)
    s.add_argument("--directions", default="all", choices=("all", "hv", "da"))
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("analyze", help="correlation discriminability report")
    s.add_argument("--natural", required=True)
    s.add_argument("--recolored", required=True)
    s.add_argument("--bins", type=int, default=200)
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="recolor a folder of naturals and write a manifest")
    s.add_argument("--input", required=True)
    s.add_argument("--method", required=True, choices=("reinhard", "affine", "hue"))
    s.add_argument("--out", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--ratios", default="0.8,0.2,0.0")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train a detector")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--features")
    src.add_argument("--manifest")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--log", required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="evaluate a detector")
    s.add_argument("--model", required=True)
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--features")
    src.add_argument("--manifest")
    s.add_argument("--split", choices=("train", "val", "test", "all"), help="default: test split if present, else all")
    s.add_argument("--report", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("predict", help="classify one image")
    s.add_argument("--model", required=True)
    s.add_argument("--image", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("ablate", help="compare input variants under one seed")
    s.add_argument("--manifest", required=True)
    s.add_argument("--variants", default=",".join(VARIANTS))
    s.add_argument("--config")
    s.add_argument("--split", default="test", choices=("train", "val", "test"))
    s.add_argument("--jobs", type=int, default=1, help="train variants in parallel, each with its own derived seed")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("corpus", help="cut random crops from the bundled sample photos")
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int, default=2000)
    s.add_argument("--size", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--source", action="append", help="photo to crop from (repeatable)")
    s.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except RecolorDetectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
