from __future__ import annotations

import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.errors import SchemaMismatchError, UsageError
from ..core.types import ModelArtifact, Prediction, Settings
from .base import Classifier, to_predictions
from .encoders import encoder_from_state, make_encoder
from .forest import RandomForest
from .nbm import BagNaiveBayes
from .networks import Network, build_cnn, build_fcnn
from .trainer import train_network
from .tree import DecisionTree
from .two_stage import TwoStageClassifier

logger = logging.getLogger(__name__)

MODEL_KINDS = ("nbm", "dt", "rf", "fcnn", "cnn", "two-stage")
COMPATIBLE: Dict[str, Tuple[str, ...]] = {
    "hour": ("two-stage", "nbm", "rf", "dt"),
    "second": ("rf", "dt", "fcnn"),
    "flow": ("rf", "dt", "fcnn"),
    "grid": ("cnn",),
}

Validation = Tuple[pd.DataFrame, Optional[np.ndarray], np.ndarray]


def check_compatible(schema: str, kind: str) -> None:
    if kind not in MODEL_KINDS:
        raise UsageError(f"unknown model kind '{kind}' (valid kinds: {', '.join(MODEL_KINDS)})")
    if schema not in COMPATIBLE:
        raise UsageError(f"unknown schema '{schema}' (valid schemas: {', '.join(sorted(COMPATIBLE))})")
    if kind not in COMPATIBLE[schema]:
        raise SchemaMismatchError(
            f"model '{kind}' cannot be trained on schema '{schema}' "
            f"(schema '{schema}' accepts: {', '.join(COMPATIBLE[schema])})"
        )


def _fit(kind: str, X: Any, y: np.ndarray, class_count: int, settings: Settings, seed: int,
         validation: Optional[Tuple[Any, np.ndarray]]):
    tree = settings.tree
    if kind == "dt":
        return DecisionTree(class_count, max_depth=tree.max_depth).fit(X, y), None
    if kind == "rf":
        return RandomForest(class_count, n_trees=tree.n_trees, max_features=tree.max_features,
                            bootstrap=tree.bootstrap, max_depth=tree.max_depth, seed=seed,
                            workers=tree.workers).fit(X, y), None
    if kind == "nbm":
        return BagNaiveBayes(class_count).fit(X.union_bags(), y), None
    if kind == "two-stage":
        return TwoStageClassifier(class_count, tree, seed).fit(X, y, workers=tree.workers), None
    net = settings.network
    if kind == "fcnn":
        network = build_fcnn(X.shape[1], class_count, hidden=net.hidden, seed=seed)
    else:
        rows, cols = X.shape[1], X.shape[2]
        network = build_cnn(class_count, rows=rows, cols=cols, filters=net.filters, kernel=net.kernel,
                            dropout=net.dropout, seed=seed)
    X_val, y_val = validation if validation is not None else (None, None)
    result = train_network(network, X, y, X_val, y_val, net, seed=seed)
    return network, result


def train_model(kind: str, schema: str, frame: pd.DataFrame, grids: Optional[np.ndarray],
                labels: Sequence[int], *, class_count: int, settings: Settings, seed: int,
                validation: Optional[Validation] = None, training_period: str = "all",
                period_weeks: Tuple[int, int] = (0, 0), week_origin: Optional[float] = None) -> ModelArtifact:
    """Fit the encoder and the model on training rows and package both."""
    check_compatible(schema, kind)
    y = np.asarray(labels, dtype=np.int64)
    encoder = make_encoder(schema, kind).fit(frame)
    X = encoder.transform(frame, grids)
    val = None
    if validation is not None and kind in ("fcnn", "cnn"):
        v_frame, v_grids, v_labels = validation
        val = (encoder.transform(v_frame, v_grids), np.asarray(v_labels, dtype=np.int64))
    logger.info("training %s on %s: %d rows, %d classes", kind, schema, len(y), class_count)
    model, result = _fit(kind, X, y, class_count, settings, seed, val)
    return ModelArtifact(
        kind=kind,
        schema=schema,
        class_count=class_count,
        training_period=training_period,
        period_weeks=tuple(period_weeks),
        seed=seed,
        model_state=model.get_state(),
        encoder_state=encoder.get_state(),
        week_origin=week_origin,
        history=result.history if result else [],
        best_epoch=result.best_epoch if result else None,
    )


def model_from_artifact(artifact: ModelArtifact) -> Classifier:
    state = artifact.model_state
    if artifact.kind == "dt":
        return DecisionTree.from_state(state)
    if artifact.kind == "rf":
        return RandomForest.from_state(state)
    if artifact.kind == "nbm":
        return BagNaiveBayes.from_state(state)
    if artifact.kind == "two-stage":
        return TwoStageClassifier.from_state(state)
    return Network.from_state(state)


class LoadedModel:
    """A model file ready for inference on stored rows of its schema."""

    def __init__(self, artifact: ModelArtifact):
        self.artifact = artifact
        self.encoder = encoder_from_state(artifact.encoder_state)
        self.model: Classifier = model_from_artifact(artifact)

    def predict_proba(self, frame: pd.DataFrame, grids: Optional[np.ndarray] = None) -> np.ndarray:
        X = self.encoder.transform(frame, grids)
        if self.artifact.kind == "nbm":
            X = X.union_bags()
        return self.model.predict_proba(X)

    def predict(self, frame: pd.DataFrame, grids: Optional[np.ndarray] = None) -> List[Prediction]:
        return to_predictions(self.predict_proba(frame, grids))
