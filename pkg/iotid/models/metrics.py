from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence, Union

import numpy as np

from ..core.types import Prediction


@dataclass
class ClassScore:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class F1Report:
    per_class: Dict[int, ClassScore] = field(default_factory=dict)
    # mean over classes present in truth
    macro_f1: float = 0.0
    weighted_f1: float = 0.0
    support: int = 0


def _class_index(p: Union[int, Prediction]) -> int:
    return p.class_index if isinstance(p, Prediction) else int(p)


def confusion_matrix(predicted: Sequence[int], truth: Sequence[int], class_count: int) -> np.ndarray:
    cm = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(cm, (np.asarray(truth, dtype=np.int64), np.asarray(predicted, dtype=np.int64)), 1)
    return cm


def f1_scores(predictions: Sequence[Union[int, Prediction]], truth: Sequence[int], class_count: int) -> F1Report:
    """Per-class precision/recall/F1 plus macro and support-weighted F1."""
    if len(predictions) != len(truth):
        raise ValueError(f"{len(predictions)} predictions for {len(truth)} labels")
    predicted = [_class_index(p) for p in predictions]
    cm = confusion_matrix(predicted, truth, class_count)
    report = F1Report(support=len(truth))
    present = []
    for c in range(class_count):
        tp = int(cm[c, c])
        fp = int(cm[:, c].sum()) - tp
        fn = int(cm[c, :].sum()) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        support = tp + fn
        report.per_class[c] = ClassScore(precision, recall, f1, support)
        if support:
            present.append(c)
    if present:
        report.macro_f1 = float(np.mean([report.per_class[c].f1 for c in present]))
        report.weighted_f1 = float(
            sum(report.per_class[c].f1 * report.per_class[c].support for c in present) / len(truth)
        )
    return report
