"""Detect recolored images from directional co-occurrence statistics."""

from .classifier.net import NetConfig
from .classifier.train import Checkpoint, TrainConfig, load_checkpoint, save_checkpoint
from .cooccurrence import CooccurrenceTensor, DirectionSubset, cooccurrence, extract_tensor, pool_tensor
from .estimators import CooccurrenceTransformer, RecolorDetector, RgbResizer
from .exceptions import DegenerateError, IncompatibleError, InputError, RecolorDetectError
from .featurefile import FeatureSet, read_features, write_features
from .imagecore import Channel, Direction, ImagePlane, RgbImage, read_image, write_png
from .metrics import EvalReport, RocCurve, compute_roc_auc
from .recolor import DatasetManifest, RecolorMethod, reinhard_transfer, synthesize_dataset
from .spatialstats import chi_square_distance, correlation_coefficient, discriminability_report

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "Checkpoint",
    "CooccurrenceTensor",
    "CooccurrenceTransformer",
    "DatasetManifest",
    "DegenerateError",
    "Direction",
    "DirectionSubset",
    "EvalReport",
    "FeatureSet",
    "ImagePlane",
    "IncompatibleError",
    "InputError",
    "NetConfig",
    "RecolorDetectError",
    "RecolorDetector",
    "RecolorMethod",
    "RgbImage",
    "RgbResizer",
    "RocCurve",
    "TrainConfig",
    "chi_square_distance",
    "compute_roc_auc",
    "cooccurrence",
    "correlation_coefficient",
    "discriminability_report",
    "extract_tensor",
    "load_checkpoint",
    "pool_tensor",
    "read_features",
    "read_image",
    "reinhard_transfer",
    "save_checkpoint",
    "synthesize_dataset",
    "write_features",
    "write_png",
]
