"""Classification metrics: accuracy, per-class precision/recall/F1, macro
aggregates and (row-normalizable) confusion matrices.

Zero-division convention: a precision/recall/F1 with an empty denominator is
0, never NaN, which penalizes classes that are never predicted. Macro scores
average over classes that appear in the truth or the predictions; classes
absent from both are skipped so structurally-impossible classes do not
distort small folds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidationError

__all__ = ["MetricsReport", "evaluate"]


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: np.ndarray  # per class
    recall: np.ndarray
    f1: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: np.ndarray  # C x C ints, rows = truth, cols = prediction
    confusion_row_normalized: np.ndarray

    @property
    def num_classes(self) -> int:
        return self.confusion.shape[0]

    def to_dict(self) -> dict:
        """Flat JSON-ready form (the report/CLI schema)."""
        return {
            "accuracy": self.accuracy,
            "mrecall": self.macro_recall,
            "mprecision": self.macro_precision,
            "mf1": self.macro_f1,
            "per_class": [
                {
                    "precision": float(self.precision[c]),
                    "recall": float(self.recall[c]),
                    "f1": float(self.f1[c]),
                }
                for c in range(self.num_classes)
            ],
            "confusion": self.confusion.tolist(),
        }


def evaluate(y_true, y_pred, num_classes: int) -> MetricsReport:
    """Score predictions against truth over ``num_classes`` classes."""
    t = np.asarray(y_true, dtype=np.int64).reshape(-1)
    p = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if t.shape[0] != p.shape[0]:
        raise ValidationError(f"y_true has {t.shape[0]} labels, y_pred has {p.shape[0]}")
    if t.shape[0] == 0:
        raise ValidationError("cannot evaluate zero samples")
    for name, arr in (("y_true", t), ("y_pred", p)):
        if arr.min() < 0 or arr.max() >= num_classes:
            raise ValidationError(f"{name} contains labels outside 0..{num_classes - 1}")

    n = t.shape[0]
    confusion = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(confusion, (t, p), 1)

    tp = np.diag(confusion).astype(np.float64)
    truth_per_class = confusion.sum(axis=1).astype(np.float64)  # tp + fn
    pred_per_class = confusion.sum(axis=0).astype(np.float64)  # tp + fp

    precision = np.divide(tp, pred_per_class, out=np.zeros(num_classes), where=pred_per_class > 0)
    recall = np.divide(tp, truth_per_class, out=np.zeros(num_classes), where=truth_per_class > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(num_classes), where=pr > 0)

    seen = (truth_per_class > 0) | (pred_per_class > 0)
    macro_precision = float(precision[seen].mean())
    macro_recall = float(recall[seen].mean())
    macro_f1 = float(f1[seen].mean())

    row_norm = np.divide(
        confusion.astype(np.float64),
        truth_per_class[:, None],
        out=np.zeros((num_classes, num_classes)),
        where=truth_per_class[:, None] > 0,
    )

    for arr in (precision, recall, f1, confusion, row_norm):
        arr.setflags(write=False)
    return MetricsReport(
        accuracy=float(tp.sum() / n),
        precision=precision,
        recall=recall,
        f1=f1,
        macro_precision=macro_precision,
        macro_recall=macro_recall,
        macro_f1=macro_f1,
        confusion=confusion,
        confusion_row_normalized=row_norm,
    )
