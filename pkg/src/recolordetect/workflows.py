"""Glue between files on disk, the estimators and the metrics.

Everything the CLI does is reachable from here as plain functions.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .classifier.train import Checkpoint, TrainConfig, checkpoint_to_bytes, predict_proba
from .cooccurrence import DirectionSubset, plane_order_for
from .estimators import CooccurrenceTransformer, RecolorDetector, RgbResizer
from .exceptions import DegenerateDataset, InputError, LayoutMismatch
from .featurefile import LABEL_NATURAL, LABEL_RECOLORED, LABEL_UNLABELED, FeatureSet, order_names, to_bytes
from .imagecore import read_image
from .metrics import EvalReport, evaluate_scores, sha256_hex
from .recolor import DatasetManifest

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".ppm", ".pnm"}


def list_images(path) -> list[Path]:
    path = Path(path)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise InputError(f"{path} is neither a file nor a directory")
    return sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES and p.is_file())


def extract_features(paths, pool=4, directions="all", labels=None) -> FeatureSet:
    tf = CooccurrenceTransformer(pool=pool, directions=directions).fit()
    tensors = [tf.transform_one(read_image(p)) for p in paths]
    if labels is None:
        labels = [LABEL_UNLABELED] * len(tensors)
    return FeatureSet.from_tensors(tensors, labels)


@dataclass(eq=False)
class LabeledArrays:
    """Model inputs with labels and provenance, aligned by row."""

    X: np.ndarray
    labels: np.ndarray
    generators: np.ndarray
    splits: np.ndarray
    source_ids: np.ndarray
    layout: dict
    dataset_id: str

    def take(self, mask) -> "LabeledArrays":
        return LabeledArrays(
            self.X[mask], self.labels[mask], self.generators[mask], self.splits[mask],
            self.source_ids[mask], self.layout, self.dataset_id,
        )

    def split(self, name: str) -> "LabeledArrays":
        return self.take(self.splits == name)

    def select_planes(self, directions) -> "LabeledArrays":
        if self.layout["input"] != "cooccurrence":
            raise LayoutMismatch("direction subsets only apply to co-occurrence inputs")
        wanted = order_names(plane_order_for(directions))
        have = list(self.layout["order"])
        try:
            idx = [have.index(n) for n in wanted]
        except ValueError as exc:
            raise LayoutMismatch(f"planes {wanted} not all present in {have}") from exc
        layout = dict(self.layout, order=wanted)
        return LabeledArrays(
            self.X[:, idx], self.labels, self.generators, self.splits, self.source_ids, layout, self.dataset_id
        )


def _manifest_meta(manifest: DatasetManifest):
    labels = np.array([1 if e.label == "recolored" else 0 for e in manifest.entries], dtype=np.int64)
    gens = np.array([e.generator for e in manifest.entries], dtype=object)
    splits = np.array([e.split for e in manifest.entries], dtype=object)
    sids = np.array([e.source_id for e in manifest.entries], dtype=object)
    return labels, gens, splits, sids


def subset_for_order(order) -> str:
    """Direction subset whose plane order equals ``order`` (plane names)."""
    for d in DirectionSubset:
        if order_names(plane_order_for(d)) == list(order):
            return d.value
    raise LayoutMismatch(f"plane order {list(order)} is not a known direction subset")


def layout_arrays(manifest: DatasetManifest, layout: dict) -> LabeledArrays:
    """Manifest inputs built to match a checkpoint's input layout."""
    if layout.get("input") == "rgb":
        return manifest_arrays(manifest, "rgb", side=int(layout["side"]))
    return manifest_arrays(manifest, pool=int(layout["pool"]), directions=subset_for_order(layout["order"]))


def manifest_arrays(manifest: DatasetManifest, input_kind="cooccurrence", pool=4, directions="all", side=64) -> LabeledArrays:
    """Inputs for every manifest entry, stored as float32 like feature files."""
    if input_kind == "rgb":
        tf = RgbResizer(side=side).fit()
    else:
        tf = CooccurrenceTransformer(pool=pool, directions=directions).fit()
    X = np.empty((len(manifest.entries),) + tf.output_shape(), dtype=np.float32)
    for i, e in enumerate(manifest.entries):
        X[i] = tf.transform_array(read_image(manifest.resolve(e)))
    labels, gens, splits, sids = _manifest_meta(manifest)
    return LabeledArrays(X, labels, gens, splits, sids, tf.layout_, manifest.digest())


def feature_arrays(fs: FeatureSet, dataset_id: str = "") -> LabeledArrays:
    if np.any(fs.labels == LABEL_UNLABELED) and not np.all(fs.labels == LABEL_UNLABELED):
        raise InputError("feature file mixes labeled and unlabeled records")
    labels = fs.labels.astype(np.int64)
    gens = np.array(["recolored" if lbl == LABEL_RECOLORED else "natural" for lbl in fs.labels], dtype=object)
    layout = {"input": "cooccurrence", "order": order_names(fs.order), "pool": fs.pool}
    n = len(fs)
    return LabeledArrays(
        fs.X, labels, gens, np.array(["train"] * n, dtype=object),
        np.array([h.hex() for h in fs.hashes], dtype=object), layout,
        dataset_id or sha256_hex(to_bytes(fs)),
    )


def _group_val_split(data: LabeledArrays, fraction: float, seed: int):
    """Split rows into train/val by source id so pairs stay together."""
    ids = sorted(set(data.source_ids.tolist()))
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    n_val = max(1, int(round(fraction * len(ids))))
    val_ids = {ids[i] for i in perm[:n_val]}
    is_val = np.array([s in val_ids for s in data.source_ids])
    return data.take(~is_val), data.take(is_val)


def train_detector(data: LabeledArrays, train_config: TrainConfig = TrainConfig(), blocks=(16, 32, 64), residual=False, epoch_callback=None) -> RecolorDetector:
    """Train on the ``train`` split and early-stop on ``val``.

    Without a ``val`` split, ``val_fraction`` of the training source ids are
    held out instead.
    """
    if set(data.labels.tolist()) - {LABEL_NATURAL, LABEL_RECOLORED}:
        raise InputError("training data must be labeled")
    tr = data.split("train")
    va = data.split("val")
    if va.X.shape[0] == 0:
        tr, va = _group_val_split(tr, train_config.val_fraction, train_config.seed)
    if tr.X.shape[0] == 0:
        raise DegenerateDataset("empty training split")
    tc = train_config
    det = RecolorDetector(
        blocks=blocks,
        residual=residual,
        initial_lr=tc.initial_lr,
        min_lr=tc.min_lr,
        cycle=tc.cycle,
        weight_decay=tc.weight_decay,
        decay_mode=tc.decay_mode,
        batch_size=tc.batch_size,
        max_epochs=tc.max_epochs,
        patience=tc.patience,
        val_fraction=tc.val_fraction,
        log_scale=tc.log_scale if data.layout["input"] == "cooccurrence" else 0.0,
        random_state=tc.seed,
        layout=data.layout,
    )
    det.fit(tr.X, tr.labels, va.X, va.labels, epoch_callback=epoch_callback)
    return det


def evaluate(ckpt: Checkpoint, data: LabeledArrays) -> EvalReport:
    ckpt.check_layout(data.layout)
    if set(data.labels.tolist()) - {LABEL_NATURAL, LABEL_RECOLORED}:
        raise InputError("evaluation data must be labeled")
    scores = predict_proba(ckpt, data.X)
    return evaluate_scores(
        scores,
        data.labels,
        data.generators,
        dataset_id=data.dataset_id,
        model_id=sha256_hex(checkpoint_to_bytes(ckpt)),
    )


VARIANTS = ("all", "hv", "da", "rgb")


def _ablation_row(v, data, train_config, blocks, residual, eval_split) -> dict:
    det = train_detector(data, train_config, blocks, residual)
    report = evaluate(det.checkpoint_, data.split(eval_split))
    log.info("ablation %s: acc %.4f auc %.4f", v, report.accuracy, report.auc)
    return {
        "variant": v,
        "planes": int(data.X.shape[1]),
        "order": list(data.layout["order"]),
        "seed": train_config.seed,
        "accuracy": report.accuracy,
        "auc": report.auc,
        "best_epoch": det.checkpoint_.epoch,
        "epochs_run": len(det.history_),
    }


def variant_seeds(seed: int, count: int) -> list[int]:
    """Independent per-variant seeds derived from a master seed."""
    return [int(ss.generate_state(1)[0]) for ss in np.random.SeedSequence(seed).spawn(count)]


def ablation_run(
    manifest: DatasetManifest,
    variants=VARIANTS,
    train_config: TrainConfig = TrainConfig(),
    blocks=(16, 32, 64),
    residual=False,
    pool=4,
    eval_split="test",
    cooccurrence_data: LabeledArrays | None = None,
    n_jobs: int = 1,
) -> list[dict]:
    """Train one model per input variant and compare them on ``eval_split``.

    ``rgb`` feeds images resized to the co-occurrence input side instead of
    tensors. With ``n_jobs == 1`` the variants train one after another under
    the shared seed of ``train_config``. With more jobs they train in
    separate processes, each under its own seed from :func:`variant_seeds`.
    """
    variants = [v.lower() for v in variants]
    for v in variants:
        if v not in VARIANTS:
            raise InputError(f"unknown ablation variant {v!r}")
    if n_jobs < 1:
        raise InputError("n_jobs must be at least 1")
    side = 256 // pool
    full = None
    inputs = []
    for v in variants:
        if v == "rgb":
            inputs.append(manifest_arrays(manifest, "rgb", side=side))
        else:
            if full is None:
                full = cooccurrence_data if cooccurrence_data is not None else manifest_arrays(manifest, pool=pool)
            inputs.append(full.select_planes(DirectionSubset(v)))
    if n_jobs == 1:
        return [_ablation_row(v, d, train_config, blocks, residual, eval_split) for v, d in zip(variants, inputs)]
    configs = [replace(train_config, seed=s) for s in variant_seeds(train_config.seed, len(variants))]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool_ex:
        futures = [
            pool_ex.submit(_ablation_row, v, d, tc, blocks, residual, eval_split)
            for v, d, tc in zip(variants, inputs, configs)
        ]
        return [f.result() for f in futures]
