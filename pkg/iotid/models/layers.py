"""Numpy layers with explicit forward and backward passes.

Images are NHWC. ``backward`` returns the gradient with respect to the layer
input and leaves parameter gradients in ``grads`` (same keys as ``params``).
"""
from __future__ import annotations

from typing import Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    def __init__(self) -> None:
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        return input_shape


class Dense(Layer):
    def __init__(self, input_size: int, output_size: int, rng: np.random.Generator):
        super().__init__()
        scale = np.sqrt(2.0 / input_size)
        self.params = {
            "W": rng.normal(0.0, scale, size=(input_size, output_size)),
            "b": np.zeros(output_size),
        }
        self._x: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        self.grads = {"W": self._x.T @ grad, "b": grad.sum(axis=0)}
        return grad @ self.params["W"].T

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        return (self.params["W"].shape[1],)


class ReLU(Layer):
    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad * self._mask


class Conv2D(Layer):
    """Valid (unpadded) stride-1 convolution."""

    def __init__(self, in_channels: int, filters: int, kernel: int, rng: np.random.Generator):
        super().__init__()
        self.kernel = kernel
        fan_in = kernel * kernel * in_channels
        self.params = {
            "W": rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(kernel, kernel, in_channels, filters)),
            "b": np.zeros(filters),
        }

    def _columns(self, x: np.ndarray) -> Tuple[np.ndarray, Tuple[int, int, int]]:
        k = self.kernel
        # (N, H', W', C, k, k) → (N, H', W', k, k, C)
        windows = sliding_window_view(x, (k, k), axis=(1, 2)).transpose(0, 1, 2, 4, 5, 3)
        n, ho, wo = windows.shape[:3]
        return windows.reshape(n * ho * wo, -1), (n, ho, wo)

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        cols, (n, ho, wo) = self._columns(x)
        self._x_shape = x.shape
        self._cols = cols
        W = self.params["W"]
        out = cols @ W.reshape(-1, W.shape[-1]) + self.params["b"]
        return out.reshape(n, ho, wo, W.shape[-1])

    def backward(self, grad: np.ndarray) -> np.ndarray:
        W = self.params["W"]
        k = self.kernel
        n, ho, wo, f = grad.shape
        g2 = grad.reshape(-1, f)
        self.grads = {"W": (self._cols.T @ g2).reshape(W.shape), "b": g2.sum(axis=0)}
        dcols = (g2 @ W.reshape(-1, f).T).reshape(n, ho, wo, k, k, W.shape[2])
        dx = np.zeros(self._x_shape)
        for i in range(k):
            for j in range(k):
                dx[:, i:i + ho, j:j + wo, :] += dcols[:, :, :, i, j, :]
        return dx

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        h, w, _ = input_shape
        return (h - self.kernel + 1, w - self.kernel + 1, self.params["W"].shape[-1])


class MaxPool2D(Layer):
    """2×2 pooling with stride 2; odd trailing rows/columns are dropped."""

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        n, h, w, c = x.shape
        ho, wo = h // 2, w // 2
        self._x_shape = x.shape
        blocks = (x[:, :ho * 2, :wo * 2, :]
                  .reshape(n, ho, 2, wo, 2, c)
                  .transpose(0, 1, 3, 5, 2, 4)
                  .reshape(n, ho, wo, c, 4))
        self._argmax = np.argmax(blocks, axis=-1)
        return np.take_along_axis(blocks, self._argmax[..., None], axis=-1)[..., 0]

    def backward(self, grad: np.ndarray) -> np.ndarray:
        n, h, w, c = self._x_shape
        ho, wo = h // 2, w // 2
        blocks = np.zeros((n, ho, wo, c, 4))
        np.put_along_axis(blocks, self._argmax[..., None], grad[..., None], axis=-1)
        dx = np.zeros(self._x_shape)
        dx[:, :ho * 2, :wo * 2, :] = (blocks.reshape(n, ho, wo, c, 2, 2)
                                      .transpose(0, 1, 4, 2, 5, 3)
                                      .reshape(n, ho * 2, wo * 2, c))
        return dx

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        h, w, c = input_shape
        return (h // 2, w // 2, c)


class Flatten(Layer):
    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        self._x_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad.reshape(self._x_shape)

    def output_shape(self, input_shape: Tuple[int, ...]) -> Tuple[int, ...]:
        return (int(np.prod(input_shape)),)


class Dropout(Layer):
    """Inverted dropout; the identity outside training."""

    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        self.rate = rate
        self.rng = rng
        self._mask: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        if not training or self.rate <= 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) < keep) / keep
        return x * self._mask

    def backward(self, grad: np.ndarray) -> np.ndarray:
        return grad if self._mask is None else grad * self._mask


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. the logits."""
    p = softmax(logits)
    n = len(y)
    rows = np.arange(n)
    loss = float(-np.mean(np.log(np.clip(p[rows, y], 1e-300, None))))
    grad = p.copy()
    grad[rows, y] -= 1.0
    return loss, grad / n
