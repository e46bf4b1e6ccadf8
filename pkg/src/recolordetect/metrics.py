"""Accuracy, ROC curves and AUC.

The AUC is computed twice: as the trapezoidal area under the threshold sweep
and as the pairwise concordance statistic (ties count one half). Both use
integer numerators, so they agree to rounding of a single division.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import SingleClass

__all__ = ["EvalReport", "RocCurve", "accuracy", "auc_concordance", "compute_roc_auc", "evaluate_scores"]


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    auc_concordance: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def to_dict(self) -> dict:
        return {
            "fpr": self.fpr.tolist(),
            "tpr": self.tpr.tolist(),
            "thresholds": self.thresholds.tolist(),
            "auc": self.auc,
        }


def _check_binary(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(np.int64)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs at least one sample of each label")
    return scores, labels, n_pos, n_neg


def auc_concordance(scores, labels) -> float:
    """P(score of a random positive > score of a random negative), ties 1/2."""
    scores, labels, n_pos, n_neg = _check_binary(scores, labels)
    # Twice the midrank is an integer: 2 * rank_lo + (count - 1), 1-based.
    order = np.argsort(scores, kind="mergesort")
    s = scores[order]
    _, first, counts = np.unique(s, return_index=True, return_counts=True)
    twice_mid = 2 * (first + 1) + (counts - 1)
    twice_rank = np.repeat(twice_mid, counts)
    twice_pos_rank_sum = int(twice_rank[labels[order] == 1].sum())
    numerator2 = twice_pos_rank_sum - n_pos * (n_pos + 1)
    return numerator2 / (2 * n_pos * n_neg)


def compute_roc_auc(scores, labels) -> RocCurve:
    """Sweep every distinct score as a threshold (positive if score >= t)."""
    scores, labels, n_pos, n_neg = _check_binary(scores, labels)
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    y = labels[order]
    # Last index of each run of equal scores.
    ends = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = np.r_[0, np.cumsum(y)[ends]]
    fp = np.r_[0, np.cumsum(1 - y)[ends]]
    twice_area = int(np.sum((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])))
    auc = twice_area / (2 * n_pos * n_neg)
    concord = auc_concordance(scores, labels)
    if abs(auc - concord) > 1e-9:
        raise AssertionError(f"AUC routes disagree: trapezoid {auc} vs concordance {concord}")
    return RocCurve(
        fpr=fp / n_neg,
        tpr=tp / n_pos,
        thresholds=np.r_[np.inf, s[ends]],
        auc=auc,
        auc_concordance=concord,
    )


def accuracy(pred, labels) -> float:
    pred = np.asarray(pred).ravel()
    labels = np.asarray(labels).ravel()
    return int(np.sum(pred == labels)) / labels.size


@dataclass
class EvalReport:
    accuracy: float
    auc: float
    confusion: dict
    per_generator: dict
    natural_accuracy: float | None
    dataset_id: str
    model_id: str
    roc: RocCurve | None = field(default=None, repr=False)

    @property
    def total(self) -> int:
        return sum(self.confusion.values())

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "auc": self.auc,
            "confusion": self.confusion,
            "per_generator": self.per_generator,
            "natural_accuracy": self.natural_accuracy,
            "dataset_id": self.dataset_id,
            "model_id": self.model_id,
            "roc": self.roc.to_dict() if self.roc is not None else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def evaluate_scores(scores, labels, generators=None, dataset_id="", model_id="") -> EvalReport:
    """Build an :class:`EvalReport` from recolored-class probabilities.

    ``generators`` gives each sample's provenance tag (``"natural"`` for
    naturals); recolored samples are broken down by tag.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    roc = compute_roc_auc(scores, labels)
    pred = (scores > 0.5).astype(np.int64)
    tp = int(np.sum((pred == 1) & (labels == 1)))
    tn = int(np.sum((pred == 0) & (labels == 0)))
    fp = int(np.sum((pred == 1) & (labels == 0)))
    fn = int(np.sum((pred == 0) & (labels == 1)))
    if generators is None:
        generators = ["recolored" if lbl else "natural" for lbl in labels]
    generators = np.asarray(generators, dtype=object)
    per = {}
    for g in sorted(set(generators[labels == 1].tolist())):
        sel = (generators == g) & (labels == 1)
        correct = int(np.sum(pred[sel] == 1))
        per[g] = {"count": int(sel.sum()), "correct": correct, "accuracy": correct / int(sel.sum())}
    nat = labels == 0
    return EvalReport(
        accuracy=(tp + tn) / labels.size,
        auc=roc.auc,
        confusion={"tp": tp, "tn": tn, "fp": fp, "fn": fn},
        per_generator=per,
        natural_accuracy=tn / int(nat.sum()) if nat.any() else None,
        dataset_id=dataset_id,
        model_id=model_id,
        roc=roc,
    )


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()
