"""Accuracy, confusion matrix and class-wise precision/recall/F1."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InputError


@dataclass
class MetricsReport:
    accuracy: float
    confusion: np.ndarray  # rows: true class, columns: predicted class
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    undefined: np.ndarray  # classes absent from both truth and predictions
    loss_traces: list = field(default_factory=list)

    @property
    def macro_precision(self):
        return float(self.precision.mean())

    @property
    def macro_recall(self):
        return float(self.recall.mean())

    @property
    def macro_f1(self):
        return float(self.f1.mean())

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "undefined_classes": np.flatnonzero(self.undefined).tolist(),
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
        }


def confusion_matrix(predictions, labels, n_classes):
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, predictions), 1)
    return cm


def evaluate(predictions, labels, n_classes, loss_traces=None):
    predictions = np.asarray(predictions, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if len(labels) == 0:
        raise InputError("cannot evaluate an empty prediction set")
    if len(predictions) != len(labels):
        raise DimensionError(f"{len(predictions)} predictions vs {len(labels)} labels")
    for name, arr in (("labels", labels), ("predictions", predictions)):
        if arr.min() < 0 or arr.max() >= n_classes:
            raise InputError(f"{name} must lie in [0, {n_classes})")

    cm = confusion_matrix(predictions, labels, n_classes)
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    actual = cm.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, predicted, out=np.zeros(n_classes), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros(n_classes), where=actual > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(n_classes), where=denom > 0)
    return MetricsReport(
        accuracy=float(tp.sum() / len(labels)),
        confusion=cm,
        precision=precision,
        recall=recall,
        f1=f1,
        undefined=(predicted == 0) & (actual == 0),
        loss_traces=list(loss_traces or []),
    )


def mean_std(values):
    """Mean and sample (n-1) standard deviation; std is 0 for a single value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InputError("mean_std of nothing")
    # shifting by the first value keeps constant inputs exact
    mean = values[0] + (values - values[0]).mean()
    std = float(np.sqrt(((values - mean) ** 2).sum() / (values.size - 1))) if values.size > 1 else 0.0
    return float(mean), std
