from __future__ import annotations

import logging
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..core.types import HourWindowRow, Prediction, TreeSettings
from .base import to_predictions
from .encoders import HourBatch
from .forest import RandomForest
from .nbm import BagNaiveBayes

logger = logging.getLogger(__name__)

STAGE1_BAGS = ("ports", "domains", "ciphers")


class TwoStageClassifier:
    """Three bag-level naive Bayes models feeding a random forest.

    The forest sees the six numeric window features followed by the
    (class, confidence) output of each first-stage model.
    """

    def __init__(self, class_count: int, tree: Optional[TreeSettings] = None, seed: int = 0):
        self.class_count = class_count
        self.tree = tree or TreeSettings()
        self.seed = seed
        self.stage1: Dict[str, BagNaiveBayes] = {}
        self.stage2: Optional[RandomForest] = None

    def _stage1_features(self, batch: HourBatch) -> np.ndarray:
        cols = []
        for name in STAGE1_BAGS:
            proba = self.stage1[name].predict_proba(getattr(batch, name))
            best = np.argmax(proba, axis=1)
            cols.append(best.astype(np.float64))
            cols.append(proba[np.arange(len(best)), best])
        return np.column_stack(cols) if cols else np.zeros((len(batch), 0))

    def stage2_vectors(self, batch: HourBatch) -> np.ndarray:
        if len(batch) == 0:
            return np.zeros((0, batch.numeric.shape[1] + 2 * len(STAGE1_BAGS)))
        return np.column_stack([batch.numeric, self._stage1_features(batch)])

    def fit(self, batch: HourBatch, y: Sequence[int], workers: int = 1) -> "TwoStageClassifier":
        y = np.asarray(y, dtype=np.int64)
        for name in STAGE1_BAGS:
            self.stage1[name] = BagNaiveBayes(self.class_count).fit(getattr(batch, name), y)
        self.stage2 = RandomForest(
            self.class_count, n_trees=self.tree.n_trees, max_features=self.tree.max_features,
            bootstrap=self.tree.bootstrap, max_depth=self.tree.max_depth, seed=self.seed,
            workers=workers,
        ).fit(self.stage2_vectors(batch), y)
        logger.info("two-stage model trained on %d windows", len(y))
        return self

    def predict_proba(self, batch: HourBatch) -> np.ndarray:
        return self.stage2.predict_proba(self.stage2_vectors(batch))

    def predict(self, batch: HourBatch) -> List[Prediction]:
        return to_predictions(self.predict_proba(batch))

    def get_state(self) -> Dict[str, Any]:
        return {
            "class_count": self.class_count,
            "seed": self.seed,
            "stage1": {name: m.get_state() for name, m in self.stage1.items()},
            "stage2": self.stage2.get_state() if self.stage2 else None,
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "TwoStageClassifier":
        model = cls(int(state["class_count"]), seed=int(state["seed"]))
        model.stage1 = {name: BagNaiveBayes.from_state(s) for name, s in state["stage1"].items()}
        model.stage2 = RandomForest.from_state(state["stage2"]) if state["stage2"] else None
        return model


def _batch_of(row: HourWindowRow) -> HourBatch:
    return HourBatch(
        ports=[[str(p) for p in row.bag_of_ports]],
        domains=[[str(d) for d in row.bag_of_domains]],
        ciphers=[[str(c) for c in row.bag_of_ciphers]],
        numeric=np.asarray([row.numeric()], dtype=np.float64),
    )


def stage2_vector(row: HourWindowRow, stage1: Dict[str, BagNaiveBayes]) -> np.ndarray:
    """The 12-value stage-2 input for one window."""
    model = TwoStageClassifier(next(iter(stage1.values())).class_count)
    model.stage1 = stage1
    return model.stage2_vectors(_batch_of(row))[0]


def two_stage_predict(row: HourWindowRow, stage1: Dict[str, BagNaiveBayes], stage2: RandomForest) -> Prediction:
    return stage2.predict(stage2_vector(row, stage1)[None, :])[0]

