from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import TrainingError
from ..core.types import Prediction
from ..utils.log import progress
from .base import check_labels, to_predictions
from .tree import DecisionTree

logger = logging.getLogger(__name__)


def _grow_tree(args: Tuple[np.ndarray, np.ndarray, int, Any, Optional[int], bool,
                           np.random.SeedSequence]) -> Dict[str, Any]:
    X, y, class_count, max_features, max_depth, bootstrap, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    if bootstrap:
        rows = rng.integers(0, len(X), size=len(X))
        X, y = X[rows], y[rows]
    tree = DecisionTree(class_count, max_features=max_features, max_depth=max_depth, rng=rng)
    return tree.fit(X, y).get_state()


class RandomForest:
    """Bagged CART trees with per-split feature subsetting and majority voting.

    Every tree draws from its own generator spawned from the master seed, so
    parallel and sequential training give identical forests.
    """

    def __init__(self, class_count: int, *, n_trees: int = 100,
                 max_features: Union[None, str, int] = "sqrt", bootstrap: bool = True,
                 max_depth: Optional[int] = None, seed: int = 0, workers: int = 1):
        if n_trees < 1:
            raise ValueError("a forest needs at least one tree")
        self.class_count = class_count
        self.n_trees = n_trees
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.max_depth = max_depth
        self.seed = seed
        self.workers = workers
        self.trees: List[DecisionTree] = []

    def fit(self, X: np.ndarray, y: Sequence[int]) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = check_labels(np.asarray(y), self.class_count)
        if X.ndim != 2 or len(X) == 0:
            raise TrainingError("random forest needs at least one row")
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        jobs = [(X, y, self.class_count, self.max_features, self.max_depth, self.bootstrap, s) for s in seeds]
        if self.workers > 1 and self.n_trees > 1:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                states = list(progress(pool.map(_grow_tree, jobs), desc="trees", total=self.n_trees))
        else:
            states = [_grow_tree(job) for job in progress(jobs, desc="trees", total=self.n_trees)]
        self.trees = [DecisionTree.from_state(s) for s in states]
        logger.info("random forest: %d trees, %d nodes total", len(self.trees),
                    sum(t.node_count for t in self.trees))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Vote fractions per class."""
        if not self.trees:
            raise TrainingError("random forest is not trained")
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((len(X), self.class_count), dtype=np.float64)
        rows = np.arange(len(X))
        for tree in self.trees:
            leaf_class = np.argmax(tree.predict_proba(X), axis=1)
            votes[rows, leaf_class] += 1.0
        return votes / len(self.trees)

    def predict(self, X: np.ndarray) -> List[Prediction]:
        return to_predictions(self.predict_proba(X))

    def get_state(self) -> Dict[str, Any]:
        return {
            "class_count": self.class_count,
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "bootstrap": self.bootstrap,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "trees": [t.get_state() for t in self.trees],
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "RandomForest":
        forest = cls(int(state["class_count"]), n_trees=int(state["n_trees"]),
                     max_features=state["max_features"], bootstrap=bool(state["bootstrap"]),
                     max_depth=state["max_depth"], seed=int(state["seed"]))
        forest.trees = [DecisionTree.from_state(s) for s in state["trees"]]
        return forest


def rf_train(rows: np.ndarray, labels: Sequence[int], class_count: int, *, n_trees: int = 100,
             max_features: Union[None, str, int] = "sqrt", bootstrap: bool = True, seed: int = 0,
             workers: int = 1) -> RandomForest:
    return RandomForest(class_count, n_trees=n_trees, max_features=max_features, bootstrap=bootstrap,
                        seed=seed, workers=workers).fit(rows, labels)


def rf_predict(forest: RandomForest, row: Sequence[float]) -> Prediction:
    return forest.predict(np.asarray(row, dtype=np.float64)[None, :])[0]
