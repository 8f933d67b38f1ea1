from __future__ import annotations

import copy
from typing import Any, Dict, Iterator, List, Sequence, Tuple

import numpy as np

from ..core.types import Prediction
from .base import to_predictions
from .layers import Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D, ReLU, softmax

INFERENCE_BATCH = 1024


class Network:
    """A sequential stack of layers ending in logits."""

    def __init__(self, kind: str, layers: List[Layer], class_count: int, input_shape: Tuple[int, ...],
                 config: Dict[str, Any]):
        self.kind = kind
        self.layers = layers
        self.class_count = class_count
        self.input_shape = tuple(input_shape)
        self.config = dict(config)

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self) -> Iterator[Tuple[Layer, str]]:
        for layer in self.layers:
            for name in layer.params:
                yield layer, name

    def snapshot(self) -> List[Dict[str, np.ndarray]]:
        return [copy.deepcopy(layer.params) for layer in self.layers]

    def restore(self, snapshot: Sequence[Dict[str, np.ndarray]]) -> None:
        for layer, params in zip(self.layers, snapshot):
            layer.params = {k: v.copy() for k, v in params.items()}

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        if len(X) == 0:
            return np.zeros((0, self.class_count))
        out = [softmax(self.forward(X[i:i + INFERENCE_BATCH], training=False))
               for i in range(0, len(X), INFERENCE_BATCH)]
        return np.vstack(out)

    def predict(self, X: np.ndarray) -> List[Prediction]:
        return to_predictions(self.predict_proba(X))

    def shape_trace(self) -> List[Tuple[int, ...]]:
        shapes = [self.input_shape]
        for layer in self.layers:
            shapes.append(layer.output_shape(shapes[-1]))
        return shapes

    def get_state(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "class_count": self.class_count,
            "input_shape": self.input_shape,
            "config": self.config,
            "params": self.snapshot(),
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "Network":
        config = state["config"]
        class_count = int(state["class_count"])
        if state["kind"] == "fcnn":
            net = build_fcnn(int(state["input_shape"][0]), class_count, hidden=tuple(config["hidden"]), seed=0)
        else:
            rows, cols, _ = state["input_shape"]
            net = build_cnn(class_count, rows=rows, cols=cols, filters=tuple(config["filters"]),
                            kernel=int(config["kernel"]), dropout=float(config["dropout"]), seed=0)
        net.restore(state["params"])
        return net


def build_fcnn(input_dim: int, class_count: int, *, hidden: Sequence[int] = (128, 64),
               seed: int = 0) -> Network:
    """Dense input → hidden Dense/ReLU blocks → Dense output over ``class_count`` logits."""
    rng = np.random.default_rng(seed)
    layers: List[Layer] = []
    width = input_dim
    for size in hidden:
        layers += [Dense(width, size, rng), ReLU()]
        width = size
    layers.append(Dense(width, class_count, rng))
    return Network("fcnn", layers, class_count, (input_dim,), {"hidden": list(hidden)})


def cnn_flat_width(rows: int, cols: int, filters: Sequence[int], kernel: int) -> int:
    h, w = rows, cols
    for _ in filters:
        h, w = (h - kernel + 1) // 2, (w - kernel + 1) // 2
    return h * w * filters[-1]


def build_cnn(class_count: int, *, rows: int = 10, cols: int = 250, filters: Sequence[int] = (8, 16),
              kernel: int = 3, dropout: float = 0.5, seed: int = 0) -> Network:
    """Conv → MaxPool → Conv → MaxPool → Flatten → Dropout → Dense."""
    rng = np.random.default_rng(seed)
    layers: List[Layer] = []
    channels = 1
    for f in filters:
        layers += [Conv2D(channels, f, kernel, rng), ReLU(), MaxPool2D()]
        channels = f
    flat = cnn_flat_width(rows, cols, filters, kernel)
    if flat <= 0:
        raise ValueError(f"a {rows}x{cols} grid is too small for {len(filters)} conv/pool stages")
    layers += [Flatten(), Dropout(dropout, rng), Dense(flat, class_count, rng)]
    net = Network("cnn", layers, class_count, (rows, cols, 1),
                  {"filters": list(filters), "kernel": kernel, "dropout": dropout})
    trace = net.shape_trace()
    flatten_at = len(layers) - 2
    if trace[flatten_at] != (flat,):
        raise AssertionError(f"flattened width {trace[flatten_at]} != {flat}")
    return net
