from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..core.errors import TrainingError
from ..core.types import NetworkSettings
from ..utils.log import progress
from .layers import softmax_cross_entropy
from .networks import Network

logger = logging.getLogger(__name__)


@dataclass
class TrainingResult:
    history: List[Dict[str, float]] = field(default_factory=list)
    best_epoch: int = 0
    best_accuracy: float = 0.0


class SGDMomentum:
    """Plain SGD with classical momentum."""

    def __init__(self, network: Network, learning_rate: float, momentum: float):
        self.network = network
        self.learning_rate = learning_rate
        self.momentum = momentum
        self._velocity = {(id(layer), name): np.zeros_like(layer.params[name])
                          for layer, name in network.parameters()}

    def step(self) -> None:
        for layer, name in self.network.parameters():
            v = self._velocity[(id(layer), name)]
            v *= self.momentum
            v -= self.learning_rate * layer.grads[name]
            layer.params[name] += v


def accuracy(network: Network, X: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return 0.0
    predicted = np.argmax(network.predict_proba(X), axis=1)
    return float(np.mean(predicted == y))


def train_network(network: Network, X: np.ndarray, y: np.ndarray, X_val: Optional[np.ndarray],
                  y_val: Optional[np.ndarray], settings: NetworkSettings, seed: int = 0) -> TrainingResult:
    """Mini-batch training that keeps the weights of the most accurate epoch.

    Accuracy is measured on the held-out slice after every epoch; without one
    the training rows are used. Earlier epochs win ties.
    """
    X = np.asarray(X)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise TrainingError(f"{network.kind} needs at least one training row")
    if X_val is None or y_val is None or len(y_val) == 0:
        X_val, y_val = X, y
    rng = np.random.default_rng(seed)
    optimizer = SGDMomentum(network, settings.learning_rate, settings.momentum)
    result = TrainingResult(best_accuracy=-1.0)
    best_weights = network.snapshot()

    for epoch in progress(range(1, settings.epochs + 1), desc=f"{network.kind} epochs", total=settings.epochs):
        order = rng.permutation(len(X))
        losses = []
        for batch_no, start in enumerate(range(0, len(X), settings.batch_size)):
            idx = order[start:start + settings.batch_size]
            logits = network.forward(X[idx], training=True)
            loss, grad = softmax_cross_entropy(logits, y[idx])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"{network.kind} loss became {loss} at epoch {epoch}, batch {batch_no}; "
                    "check feature scaling or lower the learning rate"
                )
            network.backward(grad)
            optimizer.step()
            losses.append(loss)
        acc = accuracy(network, X_val, y_val)
        result.history.append({"epoch": epoch, "loss": float(np.mean(losses)), "accuracy": acc})
        logger.debug("%s epoch %d loss %.4f held-out accuracy %.4f", network.kind, epoch, losses[-1], acc)
        if acc > result.best_accuracy:
            result.best_accuracy = acc
            result.best_epoch = epoch
            best_weights = network.snapshot()

    network.restore(best_weights)
    logger.info("%s best epoch %d with held-out accuracy %.4f", network.kind, result.best_epoch,
                result.best_accuracy)
    return result
