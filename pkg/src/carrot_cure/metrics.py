"""Evaluation metrics: confusion matrix, one-vs-rest per-class scores,
overall accuracy, and report rendering (text, JSON, CSV)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .dataset import CLASSES, NUM_CLASSES, CarrotClass


class EmptyMatrixError(ValueError):
    """Overall accuracy is undefined for an empty confusion matrix."""


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (NUM_CLASSES, NUM_CLASSES) or (c < 0).any():
            raise ValueError(
                f"counts must be a non-negative {NUM_CLASSES}x{NUM_CLASSES} matrix"
            )
        self.counts = c

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    cls: CarrotClass
    tp: int
    tn: int
    fp: int
    fn: int
    precision: float
    recall: float
    specificity: float
    f1: float
    degenerate: bool


def confusion(true_labels, predicted_labels) -> ConfusionMatrix:
    """Tally counts[i][j] = number of samples with true class i predicted j."""
    true_ids = [t.id if isinstance(t, CarrotClass) else int(t) for t in true_labels]
    pred_ids = [p.id if isinstance(p, CarrotClass) else int(p) for p in predicted_labels]
    if len(true_ids) != len(pred_ids):
        raise ValueError(
            f"label lists differ in length: {len(true_ids)} vs {len(pred_ids)}"
        )
    counts = np.zeros((NUM_CLASSES, NUM_CLASSES), dtype=np.int64)
    for t, p in zip(true_ids, pred_ids):
        if not (0 <= t < NUM_CLASSES and 0 <= p < NUM_CLASSES):
            raise ValueError(f"label out of range: true={t}, pred={p}")
        counts[t, p] += 1
    return ConfusionMatrix(counts)


def _ratio(num: int, den: int) -> tuple[float, bool]:
    """num/den with the 0/0 case mapped to (0, degenerate)."""
    if den == 0:
        return 0.0, True
    return num / den, False


def f1_from(precision: float, recall: float) -> tuple[float, bool]:
    """Harmonic mean of precision and recall; 0/0 flagged as degenerate."""
    if precision + recall == 0:
        return 0.0, True
    return 2 * precision * recall / (precision + recall), False


def class_metrics(cm: ConfusionMatrix, class_id: int) -> ClassMetrics:
    """One-vs-rest reduction of the confusion matrix for one class."""
    if not 0 <= class_id < NUM_CLASSES:
        raise ValueError(f"class_id must be in 0..{NUM_CLASSES - 1}, got {class_id}")
    c = cm.counts
    tp = int(c[class_id, class_id])
    fp = int(c[:, class_id].sum()) - tp
    fn = int(c[class_id, :].sum()) - tp
    tn = cm.total - tp - fp - fn

    precision, d1 = _ratio(tp, tp + fp)
    recall, d2 = _ratio(tp, tp + fn)
    specificity, d3 = _ratio(tn, tn + fp)
    f1, d4 = f1_from(precision, recall)
    return ClassMetrics(
        cls=CLASSES[class_id],
        tp=tp, tn=tn, fp=fp, fn=fn,
        precision=precision, recall=recall, specificity=specificity, f1=f1,
        degenerate=d1 or d2 or d3 or d4,
    )


def all_class_metrics(cm: ConfusionMatrix) -> list[ClassMetrics]:
    return [class_metrics(cm, c.id) for c in CLASSES]


def overall_accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise EmptyMatrixError("confusion matrix holds no samples")
    return float(np.trace(cm.counts)) / cm.total


REPORT_FORMATS = ("text", "json", "csv")


def render_report(cm: ConfusionMatrix, metrics: list[ClassMetrics],
                  format: str = "text") -> bytes:
    """Per-class precision/recall/specificity/F1 plus overall accuracy."""
    if format not in REPORT_FORMATS:
        raise ValueError(f"format must be one of {REPORT_FORMATS}, got {format!r}")
    acc = overall_accuracy(cm)

    if format == "json":
        payload = {
            "overall_accuracy": acc,
            "classes": [
                {
                    "key": m.cls.key,
                    "tp": m.tp, "fp": m.fp, "fn": m.fn, "tn": m.tn,
                    "precision": m.precision,
                    "recall": m.recall,
                    "specificity": m.specificity,
                    "f1": m.f1,
                    "degenerate": m.degenerate,
                }
                for m in metrics
            ],
        }
        return (json.dumps(payload, indent=2) + "\n").encode("utf-8")

    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["class", "precision", "recall", "specificity", "f1", "overall_accuracy"]
        )
        for m in metrics:
            writer.writerow(
                [
                    m.cls.key,
                    f"{m.precision * 100:.2f}",
                    f"{m.recall * 100:.2f}",
                    f"{m.specificity * 100:.2f}",
                    f"{m.f1 * 100:.2f}",
                    f"{acc * 100:.2f}",
                ]
            )
        return buf.getvalue().encode("utf-8")

    lines = [
        f"{'class':<14}{'precision':>11}{'recall':>9}{'specificity':>13}{'f1':>9}",
    ]
    for m in metrics:
        flag = " *" if m.degenerate else ""
        lines.append(
            f"{m.cls.key:<14}{m.precision * 100:>10.2f}%{m.recall * 100:>8.2f}%"
            f"{m.specificity * 100:>12.2f}%{m.f1 * 100:>8.2f}%{flag}"
        )
    lines.append(f"overall accuracy: {acc * 100:.2f}%")
    if any(m.degenerate for m in metrics):
        lines.append("* metric had an empty denominator and was reported as 0")
    return ("\n".join(lines) + "\n").encode("utf-8")
