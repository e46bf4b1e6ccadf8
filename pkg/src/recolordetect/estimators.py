"""scikit-learn compatible wrappers.

``CooccurrenceTransformer`` turns images into pooled co-occurrence tensors,
``RgbResizer`` gives the raw-pixel baseline input, and ``RecolorDetector`` is
the classifier with ``fit`` / ``predict`` / ``predict_proba``. They compose in
a :class:`sklearn.pipeline.Pipeline`.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .classifier.net import NetConfig
from .classifier.train import (
    Checkpoint,
    TrainConfig,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    label_from_proba,
    predict_proba,
    train,
)
from .cooccurrence import DirectionSubset, extract_tensor, plane_order_for, pool_tensor, select_directions
from .featurefile import order_names
from .imagecore import RgbImage, read_image

__all__ = ["CooccurrenceTransformer", "RecolorDetector", "RgbResizer", "as_image"]


def as_image(item) -> RgbImage:
    if isinstance(item, RgbImage):
        return item
    if isinstance(item, (str, Path)):
        return read_image(item)
    return RgbImage(np.asarray(item, dtype=np.uint8))


class CooccurrenceTransformer(TransformerMixin, BaseEstimator):
    """Images (``RgbImage``, paths or ``(h, w, 3)`` arrays) to pooled tensors.

    Output shape is ``(n, planes, 256 // pool, 256 // pool)``; each plane sums
    to one.
    """

    def __init__(self, pool=4, directions="all"):
        self.pool = pool
        self.directions = directions

    def fit(self, X=None, y=None):
        DirectionSubset(self.directions)
        if self.pool not in (1, 2, 4, 8):
            raise ValueError("pool must be one of 1, 2, 4, 8")
        self.layout_ = self.layout()
        return self

    def layout(self) -> dict:
        order = plane_order_for(self.directions)
        return {"input": "cooccurrence", "order": order_names(order), "pool": int(self.pool)}

    def transform_one(self, item):
        t = extract_tensor(as_image(item))
        t = select_directions(t, self.directions)
        return pool_tensor(t, self.pool)

    def transform_array(self, item) -> np.ndarray:
        return self.transform_one(item).planes

    def output_shape(self) -> tuple:
        side = 256 // self.pool
        return (len(plane_order_for(self.directions)), side, side)

    def transform(self, X):
        check_is_fitted(self, "layout_")
        return np.stack([self.transform_array(item) for item in X])


class RgbResizer(TransformerMixin, BaseEstimator):
    """Raw-pixel baseline input: bilinear resize to ``side``, scaled to [0, 1]."""

    def __init__(self, side=64):
        self.side = side

    def fit(self, X=None, y=None):
        self.layout_ = self.layout()
        return self

    def layout(self) -> dict:
        return {"input": "rgb", "order": ["R", "G", "B"], "pool": None, "side": int(self.side)}

    def transform_one(self, item) -> np.ndarray:
        img = as_image(item)
        im = Image.fromarray(img.data).resize((self.side, self.side), Image.BILINEAR)
        return np.asarray(im, dtype=np.float64).transpose(2, 0, 1) / 255.0

    transform_array = transform_one

    def output_shape(self) -> tuple:
        return (3, self.side, self.side)

    def transform(self, X):
        check_is_fitted(self, "layout_")
        return np.stack([self.transform_one(item) for item in X])


class RecolorDetector(ClassifierMixin, BaseEstimator):
    """Compact CNN deciding natural (0) versus recolored (1).

    Hyper-parameters mirror :class:`TrainConfig` and :class:`NetConfig`.
    ``fit`` splits off ``val_fraction`` of the data for early stopping unless
    an explicit validation set is passed.
    """

    def __init__(
        self,
        blocks=(16, 32, 64),
        residual=False,
        initial_lr=1e-4,
        min_lr=0.0,
        cycle=64,
        weight_decay=1e-3,
        decay_mode="l2",
        batch_size=32,
        max_epochs=20,
        patience=5,
        val_fraction=0.2,
        log_scale=1e4,
        random_state=0,
        layout=None,
    ):
        self.blocks = blocks
        self.residual = residual
        self.initial_lr = initial_lr
        self.min_lr = min_lr
        self.cycle = cycle
        self.weight_decay = weight_decay
        self.decay_mode = decay_mode
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.val_fraction = val_fraction
        self.log_scale = log_scale
        self.random_state = random_state
        self.layout = layout

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            initial_lr=self.initial_lr,
            min_lr=self.min_lr,
            cycle=self.cycle,
            weight_decay=self.weight_decay,
            decay_mode=self.decay_mode,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            val_fraction=self.val_fraction,
            log_scale=self.log_scale,
            seed=int(self.random_state or 0),
        )

    def _validate(self, X):
        X = check_array(X, allow_nd=True, dtype=(np.float32, np.float64), ensure_2d=False)
        if X.ndim != 4 or X.shape[2] != X.shape[3]:
            raise ValueError(f"expected (n, planes, side, side) input, got shape {X.shape}")
        return X

    def fit(self, X, y, X_val=None, y_val=None, epoch_callback=None):
        X = self._validate(X)
        y = np.asarray(y, dtype=np.int64)
        tc = self.train_config()
        if X_val is None:
            rng = np.random.default_rng(tc.seed)
            perm = rng.permutation(len(X))
            n_val = max(1, int(round(tc.val_fraction * len(X))))
            val, tr = perm[:n_val], perm[n_val:]
            X, X_val, y, y_val = X[tr], X[val], y[tr], y[val]
        else:
            X_val = self._validate(X_val)
            y_val = np.asarray(y_val, dtype=np.int64)
        net = NetConfig(
            input_planes=X.shape[1], input_side=X.shape[2], blocks=tuple(self.blocks), residual=bool(self.residual)
        )
        self.checkpoint_, self.history_ = train(
            X, y, X_val, y_val, tc, net, layout=self.layout, epoch_callback=epoch_callback
        )
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        return self

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "RecolorDetector":
        tc = ckpt.train_config
        est = cls(
            blocks=ckpt.net.blocks,
            residual=ckpt.net.residual,
            initial_lr=tc.initial_lr,
            min_lr=tc.min_lr,
            cycle=tc.cycle,
            weight_decay=tc.weight_decay,
            decay_mode=tc.decay_mode,
            batch_size=tc.batch_size,
            max_epochs=tc.max_epochs,
            patience=tc.patience,
            val_fraction=tc.val_fraction,
            log_scale=tc.log_scale,
            random_state=tc.seed,
            layout=ckpt.layout,
        )
        est.checkpoint_ = ckpt
        est.history_ = []
        est.classes_ = np.array([0, 1])
        net = ckpt.net
        est.n_features_in_ = net.input_planes * net.input_side**2
        return est

    def save(self, path) -> None:
        check_is_fitted(self, "checkpoint_")
        Path(path).write_bytes(checkpoint_to_bytes(self.checkpoint_))

    @classmethod
    def load(cls, path) -> "RecolorDetector":
        return cls.from_checkpoint(checkpoint_from_bytes(Path(path).read_bytes()))

    def predict_proba(self, X):
        check_is_fitted(self, "checkpoint_")
        p = predict_proba(self.checkpoint_, self._validate(X))
        return np.column_stack([1.0 - p, p])

    def decision_function(self, X):
        return self.predict_proba(X)[:, 1]

    def predict(self, X):
        return label_from_proba(self.decision_function(X))
