"""Per-class precision/recall/F1, macro and weighted averages, confusion matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInput
from ..sensor_data import LABELS, ActivityLabel
from .tree import N_CLASSES, as_label_indices


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class MetricsReport:
    per_class: dict[ActivityLabel, ClassScores]
    """All five labels, in enum order, whether or not they occur."""
    macro_avg: ClassScores
    weighted_avg: ClassScores
    confusion: np.ndarray
    """5x5 counts, rows = true label, columns = predicted label."""
    averaged_labels: tuple[ActivityLabel, ...]
    """Labels entering the macro/weighted averages."""

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    @property
    def macro_f1(self) -> float:
        return self.macro_avg.f1

    def rows(self) -> list[tuple[str, ClassScores]]:
        """Table rows: one per class, then the macro and weighted averages."""
        out = [(lab.value, self.per_class[lab]) for lab in LABELS]
        out.append(("macro avg", self.macro_avg))
        out.append(("weighted avg", self.weighted_avg))
        return out

    def format_table(self) -> str:
        lines = [f"{'':>14}{'precision':>11}{'recall':>9}{'f1-score':>10}{'support':>9}"]
        for name, s in self.rows():
            if name == "macro avg":
                lines.append("")
            lines.append(f"{name:>14}{s.precision:>11.2f}{s.recall:>9.2f}{s.f1:>10.2f}{s.support:>9d}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        out = ["class,precision,recall,f1,support"]
        for name, s in self.rows():
            out.append(f"{name},{s.precision:.6f},{s.recall:.6f},{s.f1:.6f},{s.support}")
        return "\n".join(out) + "\n"


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def confusion_matrix(y_true, y_pred) -> np.ndarray:
    t = as_label_indices(y_true)
    p = as_label_indices(y_pred)
    cm = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def compute_metrics(y_true, y_pred, labels=None) -> MetricsReport:
    """Score predictions against ground truth.

    ``labels`` selects which classes enter the macro and weighted averages.
    By default these are the labels that occur in either ``y_true`` or
    ``y_pred``; pass ``LABELS`` to average over all five, in which case
    absent classes count as zero. Classes with no support or no predictions
    score 0 for the undefined ratio.
    """
    t = as_label_indices(y_true)
    p = as_label_indices(y_pred)
    if len(t) == 0:
        raise EmptyInput("no prediction pairs to score")
    if len(t) != len(p):
        raise ValueError("y_true and y_pred differ in length")
    cm = confusion_matrix(t, p)
    tp = np.diag(cm)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)

    per_class = {}
    for i, lab in enumerate(LABELS):
        prec = tp[i] / predicted[i] if predicted[i] else 0.0
        rec = tp[i] / support[i] if support[i] else 0.0
        per_class[lab] = ClassScores(float(prec), float(rec), _f1(prec, rec), int(support[i]))

    if labels is None:
        present = set(t.tolist()) | set(p.tolist())
        averaged = tuple(lab for lab in LABELS if lab.index in present)
    else:
        averaged = tuple(lab if isinstance(lab, ActivityLabel) else LABELS[lab] for lab in labels)

    scores = [per_class[lab] for lab in averaged]
    total = sum(s.support for s in scores)
    macro = ClassScores(
        float(np.mean([s.precision for s in scores])),
        float(np.mean([s.recall for s in scores])),
        float(np.mean([s.f1 for s in scores])),
        total,
    )
    if total:
        w = np.array([s.support for s in scores], dtype=np.float64) / total
        weighted = ClassScores(
            float(np.dot(w, [s.precision for s in scores])),
            float(np.dot(w, [s.recall for s in scores])),
            float(np.dot(w, [s.f1 for s in scores])),
            total,
        )
    else:
        weighted = ClassScores(0.0, 0.0, 0.0, 0)
    return MetricsReport(per_class, macro, weighted, cm, averaged)
