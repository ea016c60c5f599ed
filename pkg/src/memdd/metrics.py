"""Classification and regression metrics.

Multi-class precision/recall/F1 are one-vs-rest per class and macro-averaged.
Undefined ratios (zero denominators) are reported as 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


class ConfusionMatrix:
    """``counts[true, predicted]`` over ``n_classes`` classes."""

    def __init__(self, n_classes: int, counts=None):
        self.n_classes = int(n_classes)
        if counts is None:
            counts = np.zeros((self.n_classes, self.n_classes), dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (self.n_classes, self.n_classes):
            raise ValueError(f"counts must be {self.n_classes}x{self.n_classes}")
        if (self.counts < 0).any():
            raise ValueError("confusion counts must be nonnegative")

    @classmethod
    def from_labels(cls, y_true, y_pred, n_classes: int | None = None) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise ValueError(f"label arrays differ in shape: {y_true.shape} vs {y_pred.shape}")
        if n_classes is None:
            n_classes = int(max(y_true.max(initial=-1), y_pred.max(initial=-1))) + 1
        cm = cls(n_classes)
        np.add.at(cm.counts, (y_true, y_pred), 1)
        return cm

    @classmethod
    def binary(cls, tp: int, tn: int, fp: int, fn: int) -> "ConfusionMatrix":
        """Two-class matrix with class 1 as the positive class."""
        return cls(2, [[tn, fp], [fn, tp]])

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def one_vs_rest(self, c: int) -> tuple[int, int, int, int]:
        """``(TP, TN, FP, FN)`` treating class ``c`` as positive."""
        if not 0 <= c < self.n_classes:
            raise ValueError(f"unknown class index {c}")
        tp = int(self.counts[c, c])
        fp = int(self.counts[:, c].sum()) - tp
        fn = int(self.counts[c, :].sum()) - tp
        return tp, self.total - tp - fp - fn, fp, fn

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if other.n_classes != self.n_classes:
            raise ValueError("cannot merge confusion matrices of different sizes")
        return ConfusionMatrix(self.n_classes, self.counts + other.counts)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("accuracy of an empty evaluation")
    return int(np.trace(cm.counts)) / cm.total


def precision_recall(cm: ConfusionMatrix, c: int) -> tuple[float, float]:
    if cm.total == 0:
        raise ValueError("precision/recall of an empty evaluation")
    tp, _, fp, fn = cm.one_vs_rest(c)
    return _ratio(tp, tp + fp), _ratio(tp, tp + fn)


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s > 0 else 0.0


def f1_macro(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValueError("F1 of an empty evaluation")
    scores = [f1_score(*precision_recall(cm, c)) for c in range(cm.n_classes)]
    return sum(scores) / len(scores)


def mse(predicted, actual) -> float:
    """Mean of squared differences over every scalar entry."""
    p = np.asarray(predicted, dtype=np.float64).ravel()
    a = np.asarray(actual, dtype=np.float64).ravel()
    if p.shape != a.shape:
        raise ValueError(f"mse: {p.size} predictions vs {a.size} targets")
    if p.size == 0:
        raise ValueError("mse of an empty evaluation")
    d = p - a
    # fsum is correctly rounded, so the result does not depend on sample order.
    return math.fsum(d * d) / d.size


def argmax_labels(logits) -> np.ndarray:
    # np.argmax returns the first maximal index, i.e. the lowest class on ties.
    return np.asarray(logits).argmax(axis=1)


@dataclass
class EvalReport:
    n_samples: int
    accuracy: float | None = None
    macro_precision: float | None = None
    macro_recall: float | None = None
    macro_f1: float | None = None
    mse: float | None = None
    mse_raw: float | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


def classification_report(y_true, logits, n_classes: int) -> EvalReport:
    cm = ConfusionMatrix.from_labels(y_true, argmax_labels(logits), n_classes)
    pr = [precision_recall(cm, c) for c in range(n_classes)]
    return EvalReport(
        n_samples=cm.total,
        accuracy=accuracy(cm),
        macro_precision=sum(p for p, _ in pr) / n_classes,
        macro_recall=sum(r for _, r in pr) / n_classes,
        macro_f1=f1_macro(cm),
    )
