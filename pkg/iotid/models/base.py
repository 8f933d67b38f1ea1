from __future__ import annotations

from typing import Any, Dict, List, Protocol

import numpy as np

from ..core.types import Prediction


class Classifier(Protocol):
    """Interface shared by every estimator in ``iotid.models``."""

    class_count: int

    def predict_proba(self, X: Any) -> np.ndarray: ...

    def get_state(self) -> Dict[str, Any]: ...


def to_predictions(proba: np.ndarray) -> List[Prediction]:
    """Argmax per row; ties resolve to the lowest class index."""
    if proba.size == 0:
        return []
    best = np.argmax(proba, axis=1)
    conf = proba[np.arange(len(best)), best]
    return [Prediction(int(c), float(min(max(p, 0.0), 1.0))) for c, p in zip(best, conf)]


def check_labels(y: np.ndarray, class_count: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if y.size and (y.min() < 0 or y.max() >= class_count):
        raise ValueError(f"labels must lie in [0, {class_count})")
    return y
