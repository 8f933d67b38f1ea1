"""
Tests for the numpy layers, the two network builders and the best-epoch trainer.
"""

import numpy as np
import pytest

from iotid.core.errors import TrainingError
from iotid.core.types import NetworkSettings
from iotid.models.layers import Conv2D, Dense, Dropout, MaxPool2D, ReLU, softmax, softmax_cross_entropy
from iotid.models.networks import Network, build_cnn, build_fcnn, cnn_flat_width
from iotid.models.trainer import accuracy, train_network


def _numeric_grad(f, array, index, eps=1e-6):
    old = array[index]
    array[index] = old + eps
    up = f()
    array[index] = old - eps
    down = f()
    array[index] = old
    return (up - down) / (2 * eps)


def _check_layer_gradients(layer, x, seed=0):
    """Compare backward() with central differences of sum(forward(x) * G)."""
    rng = np.random.default_rng(seed)
    G = rng.normal(size=layer.forward(x).shape)

    def loss():
        return float(np.sum(layer.forward(x, training=False) * G))

    layer.forward(x, training=False)
    dx = layer.backward(G)
    grads = {k: v.copy() for k, v in layer.grads.items()}

    for _ in range(8):
        idx = tuple(int(rng.integers(0, s)) for s in x.shape)
        assert dx[idx] == pytest.approx(_numeric_grad(loss, x, idx), rel=1e-4, abs=1e-6)
    for name, param in layer.params.items():
        for _ in range(5):
            idx = tuple(int(rng.integers(0, s)) for s in param.shape)
            assert grads[name][idx] == pytest.approx(_numeric_grad(loss, param, idx), rel=1e-4, abs=1e-6)


def _check_network_gradients(net, x, y):
    """Every parameter element of a whole network against central differences of the batch loss."""

    def loss():
        return softmax_cross_entropy(net.forward(x, training=False), y)[0]

    _, grad = softmax_cross_entropy(net.forward(x, training=False), y)
    net.backward(grad)
    analytic = [(layer, name, layer.grads[name].copy()) for layer, name in net.parameters()]
    assert analytic
    for layer, name, g in analytic:
        param = layer.params[name]
        for idx in np.ndindex(param.shape):
            assert g[idx] == pytest.approx(_numeric_grad(loss, param, idx), rel=1e-4, abs=1e-7), (name, idx)


def test_fcnn_gradients_end_to_end():
    rng = np.random.default_rng(7)
    net = build_fcnn(4, 3, hidden=(5,), seed=2)
    _check_network_gradients(net, rng.normal(size=(6, 4)), np.array([0, 1, 2, 2, 1, 0]))


def test_cnn_gradients_end_to_end():
    rng = np.random.default_rng(8)
    net = build_cnn(3, rows=4, cols=6, filters=(2,), kernel=3, dropout=0.0, seed=5)
    assert net.shape_trace()[-1] == (3,)
    _check_network_gradients(net, rng.normal(size=(5, 4, 6, 1)), np.array([0, 1, 2, 0, 1]))


def test_softmax_rows_sum_to_one():
    logits = np.random.default_rng(0).normal(0, 50, size=(20, 7))
    p = softmax(logits)
    assert p.sum(axis=1) == pytest.approx(np.ones(20))
    assert (p >= 0).all()


def test_cross_entropy_gradient():
    logits = np.array([[2.0, 0.0, -1.0]])
    loss, grad = softmax_cross_entropy(logits, np.array([0]))
    p = softmax(logits)[0]
    assert loss == pytest.approx(-np.log(p[0]))
    assert grad[0] == pytest.approx(p - np.array([1.0, 0.0, 0.0]))


def test_dense_gradients():
    rng = np.random.default_rng(1)
    _check_layer_gradients(Dense(5, 3, rng), rng.normal(size=(4, 5)))


def test_conv_gradients():
    rng = np.random.default_rng(2)
    _check_layer_gradients(Conv2D(2, 3, 3, rng), rng.normal(size=(2, 5, 6, 2)))


def test_maxpool_gradients():
    rng = np.random.default_rng(3)
    # distinct values keep the argmax stable under the finite-difference nudge
    x = rng.permutation(2 * 4 * 6 * 2).reshape(2, 4, 6, 2).astype(np.float64)
    _check_layer_gradients(MaxPool2D(), x)


def test_maxpool_drops_odd_edge():
    x = np.arange(1 * 5 * 5 * 1, dtype=np.float64).reshape(1, 5, 5, 1)
    out = MaxPool2D().forward(x)
    assert out.shape == (1, 2, 2, 1)
    assert out[0, :, :, 0].tolist() == [[6.0, 8.0], [16.0, 18.0]]


def test_dropout_only_while_training():
    layer = Dropout(0.5, np.random.default_rng(0))
    x = np.ones((4, 100))
    assert layer.forward(x, training=False) is x
    dropped = layer.forward(x, training=True)
    assert set(np.unique(dropped)) <= {0.0, 2.0}
    assert 0 < np.count_nonzero(dropped) < dropped.size


def test_cnn_shape_trace():
    net = build_cnn(6)
    trace = [s for s, layer in zip(net.shape_trace()[1:], net.layers) if not isinstance(layer, ReLU)]
    assert trace == [(8, 248, 8), (4, 124, 8), (2, 122, 16), (1, 61, 16), (976,), (976,), (6,)]
    assert cnn_flat_width(10, 250, (8, 16), 3) == 976


def test_cnn_rejects_tiny_grid():
    with pytest.raises(ValueError):
        build_cnn(2, rows=4, cols=30)


def test_cnn_inference_is_deterministic():
    net = build_cnn(3, seed=4)
    X = np.random.default_rng(5).random((3, 10, 250, 1))
    first = net.predict_proba(X)
    assert first.shape == (3, 3)
    np.testing.assert_array_equal(first, net.predict_proba(X))


def test_fcnn_layout():
    net = build_fcnn(18, 4)
    assert [layer.params["W"].shape for layer in net.layers if "W" in layer.params] == [(18, 128), (128, 64), (64, 4)]


def _two_blobs(seed, n=200):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = np.where(y[:, None] == 0, -3.0, 3.0) + rng.normal(0, 1.0, size=(n, 2))
    return X, y


def test_fcnn_learns_separable_blobs():
    X, y = _two_blobs(0)
    X_val, y_val = _two_blobs(1, 60)
    net = build_fcnn(2, 2, seed=0)
    result = train_network(net, X, y, X_val, y_val, NetworkSettings(), seed=0)
    assert accuracy(net, X_val, y_val) >= 0.95
    assert len(result.history) == 50


def test_best_epoch_weights_restored():
    X, y = _two_blobs(2)
    X_val, y_val = _two_blobs(3, 40)
    net = build_fcnn(2, 2, hidden=(8,), seed=1)
    result = train_network(net, X, y, X_val, y_val, NetworkSettings(epochs=6, learning_rate=0.05), seed=1)
    accs = [h["accuracy"] for h in result.history]
    assert result.best_epoch == accs.index(max(accs)) + 1
    assert result.best_accuracy == max(accs)
    assert accuracy(net, X_val, y_val) == result.best_accuracy


def test_training_is_seeded():
    X, y = _two_blobs(4)
    settings = NetworkSettings(epochs=3)
    a, b = build_fcnn(2, 2, seed=9), build_fcnn(2, 2, seed=9)
    train_network(a, X, y, None, None, settings, seed=2)
    train_network(b, X, y, None, None, settings, seed=2)
    for pa, pb in zip(a.snapshot(), b.snapshot()):
        for k in pa:
            np.testing.assert_array_equal(pa[k], pb[k])


def test_nan_loss_aborts():
    X, y = _two_blobs(5)
    X[3, 0] = np.nan
    with pytest.raises(TrainingError, match="epoch 1"):
        train_network(build_fcnn(2, 2), X, y, None, None, NetworkSettings(epochs=2), seed=0)


def test_state_round_trip_keeps_predictions():
    X, _ = _two_blobs(6)
    net = build_fcnn(2, 3, hidden=(16, 8), seed=3)
    clone = Network.from_state(net.get_state())
    np.testing.assert_array_equal(net.predict_proba(X), clone.predict_proba(X))

    cnn = build_cnn(2, rows=10, cols=30, seed=3)
    grids = np.random.default_rng(0).random((2, 10, 30, 1))
    np.testing.assert_array_equal(cnn.predict_proba(grids), Network.from_state(cnn.get_state()).predict_proba(grids))
