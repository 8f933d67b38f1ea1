from __future__ import annotations

import math
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from ..core.errors import TrainingError
from ..core.types import Prediction
from .base import check_labels, to_predictions

LEAF = -1
_MIN_GAIN = 1e-12


def resolve_max_features(max_features: Union[None, str, int, float], n_features: int) -> int:
    if max_features is None:
        return n_features
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(n_features)))
    if isinstance(max_features, float) and 0 < max_features <= 1:
        return max(1, int(math.ceil(max_features * n_features)))
    return max(1, min(int(max_features), n_features))


def gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def _best_split(X: np.ndarray, Y: np.ndarray, features: np.ndarray):
    """Best (feature, threshold, weighted gini) over candidate features.

    ``Y`` is the one-hot label matrix of the node's rows. Thresholds are
    midpoints between consecutive distinct sorted values.
    """
    n = len(X)
    total = Y.sum(axis=0)
    best = (None, 0.0, np.inf)
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        distinct = xs[:-1] < xs[1:]
        if not distinct.any():
            continue
        left = np.cumsum(Y[order], axis=0)[:-1]
        right = total - left
        n_left = np.arange(1, n, dtype=np.float64)
        n_right = n - n_left
        purity = (left ** 2).sum(axis=1) / n_left + (right ** 2).sum(axis=1) / n_right
        purity = np.where(distinct, purity, -np.inf)
        i = int(np.argmax(purity))
        weighted = 1.0 - purity[i] / n
        if weighted < best[2]:
            thr = (xs[i] + xs[i + 1]) / 2.0
            if thr >= xs[i + 1]:
                thr = xs[i]
            best = (int(f), float(thr), float(weighted))
    return best


class DecisionTree:
    """CART classifier on Gini impurity, stored as flat node arrays.

    A node with ``feature == LEAF`` is a leaf; internal nodes send rows with
    ``x[feature] <= threshold`` to ``left``.
    """

    def __init__(self, class_count: int, *, max_features: Union[None, str, int] = None,
                 max_depth: Optional[int] = None, rng: Optional[np.random.Generator] = None):
        self.class_count = class_count
        self.max_features = max_features
        self.max_depth = max_depth
        self.rng = rng
        self.feature = np.zeros(0, dtype=np.int64)
        self.threshold = np.zeros(0, dtype=np.float64)
        self.left = np.zeros(0, dtype=np.int64)
        self.right = np.zeros(0, dtype=np.int64)
        self.value = np.zeros((0, class_count), dtype=np.float64)

    def fit(self, X: np.ndarray, y: Sequence[int]) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        y = check_labels(np.asarray(y), self.class_count)
        if X.ndim != 2 or len(X) == 0:
            raise TrainingError("decision tree needs at least one row")
        if len(X) != len(y):
            raise TrainingError("rows and labels differ in length")
        d = X.shape[1]
        m = resolve_max_features(self.max_features, d)
        Y = np.eye(self.class_count, dtype=np.float64)[y]

        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        value: List[np.ndarray] = []

        def new_node(rows: np.ndarray) -> int:
            counts = Y[rows].sum(axis=0)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(counts / counts.sum())
            return len(feature) - 1

        stack = [(new_node(np.arange(len(X))), np.arange(len(X)), 0)]
        while stack:
            node, rows, depth = stack.pop()
            counts = Y[rows].sum(axis=0)
            parent = gini(counts)
            if parent == 0.0 or len(rows) < 2:
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            if m >= d or self.rng is None:
                candidates = np.arange(d)
            else:
                candidates = np.sort(self.rng.choice(d, size=m, replace=False))
            f, thr, weighted = _best_split(X[rows], Y[rows], candidates)
            # zero-gain splits are kept: XOR-like nodes only separate one level down
            if f is None or weighted - parent > _MIN_GAIN:
                continue
            go_left = X[rows, f] <= thr
            feature[node] = f
            threshold[node] = thr
            left_rows, right_rows = rows[go_left], rows[~go_left]
            left[node] = new_node(left_rows)
            right[node] = new_node(right_rows)
            stack.append((right[node], right_rows, depth + 1))
            stack.append((left[node], left_rows, depth + 1))

        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.vstack(value)
        return self

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if self.node_count else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        X = np.asarray(X, dtype=np.float64)
        nodes = np.zeros(len(X), dtype=np.int64)
        active = self.feature[nodes] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            cur = nodes[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            nodes[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[nodes] != LEAF
        return nodes

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.node_count == 0:
            raise TrainingError("decision tree is not trained")
        return self.value[self.apply(X)]

    def predict(self, X: np.ndarray) -> List[Prediction]:
        return to_predictions(self.predict_proba(X))

    def get_state(self) -> Dict[str, Any]:
        return {
            "class_count": self.class_count,
            "max_features": self.max_features,
            "max_depth": self.max_depth,
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "DecisionTree":
        tree = cls(int(state["class_count"]), max_features=state["max_features"], max_depth=state["max_depth"])
        tree.feature = np.asarray(state["feature"], dtype=np.int64)
        tree.threshold = np.asarray(state["threshold"], dtype=np.float64)
        tree.left = np.asarray(state["left"], dtype=np.int64)
        tree.right = np.asarray(state["right"], dtype=np.int64)
        tree.value = np.asarray(state["value"], dtype=np.float64)
        return tree


def dt_train(rows: np.ndarray, labels: Sequence[int], class_count: int, *,
             max_depth: Optional[int] = None) -> DecisionTree:
    return DecisionTree(class_count, max_depth=max_depth).fit(rows, labels)


def dt_predict(tree: DecisionTree, row: Sequence[float]) -> Prediction:
    return tree.predict(np.asarray(row, dtype=np.float64)[None, :])[0]
