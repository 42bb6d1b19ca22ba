"""Network composition, losses, backprop, SGD, counters, and serialization."""

import json
import math

import numpy as np
import pytest

from crosswise.datasets import Dataset, gen_blobs
from crosswise.diagonal import expand_to_dense
from crosswise.errors import DivergenceError, ParameterError, ShapeError
from crosswise.network import (
    DenseLayer,
    LayerSpec,
    Network,
    NetworkSpec,
    TrainConfig,
    build_network,
    count_mults,
    count_weights,
    loss_eval,
    model_from_json,
    model_to_json,
    network_backward,
    network_forward,
    sgd_step,
    train,
    train_network,
)
from crosswise.rng import CounterRng

from oracles import central_difference, relative_error


def _single_dense(w, b, activation="identity"):
    w = np.asarray(w, dtype=float)
    spec = LayerSpec(kind="dense", in_dim=w.shape[1], out_dim=w.shape[0],
                     activation=activation)
    net_spec = NetworkSpec(layers=(spec,), seed=0)
    return Network(net_spec, [DenseLayer(spec, w, np.asarray(b, dtype=float))])


def test_spec_validation():
    with pytest.raises(ParameterError):
        LayerSpec(kind="conv", in_dim=3, out_dim=3)
    with pytest.raises(ParameterError):
        LayerSpec(kind="dense", in_dim=0, out_dim=3)
    with pytest.raises(ShapeError):
        NetworkSpec(layers=(
            LayerSpec(kind="dense", in_dim=2, out_dim=3),
            LayerSpec(kind="dense", in_dim=4, out_dim=1),
        ), seed=0)
    with pytest.raises(ParameterError):
        NetworkSpec(layers=(
            LayerSpec(kind="dense", in_dim=2, out_dim=3, activation="softmax_output"),
            LayerSpec(kind="dense", in_dim=3, out_dim=2),
        ), seed=0)


def test_identity_dense_layer_is_identity():
    net = _single_dense(np.eye(4), np.zeros(4))
    x = CounterRng(0).uniform(4, -1, 1)
    np.testing.assert_array_equal(network_forward(net, x), x)


def test_zero_weights_relu_network_is_zero():
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=3, out_dim=5, activation="relu"),
        LayerSpec(kind="dense", in_dim=5, out_dim=2, activation="relu"),
    ), seed=0)
    net = build_network(spec)
    for layer in net.layers:
        layer.w[:] = 0.0
        layer.b[:] = 0.0
    np.testing.assert_array_equal(
        network_forward(net, np.array([1.0, -2.0, 3.0])), np.zeros(2)
    )


def test_crosswise_network_equals_dense_twin():
    # An all-crosswise net must match the net built from its dense embeddings,
    # in output and in loss, across 20 seeded two-layer specs.
    for seed in range(20):
        dims = CounterRng(seed, stream=11).integers(3, 2, 33)
        d0, d1, d2 = (int(v) for v in dims)
        spec = NetworkSpec(layers=(
            LayerSpec(kind="crosswise", in_dim=d0, out_dim=d1, activation="relu"),
            LayerSpec(kind="crosswise", in_dim=d1, out_dim=d2, activation="identity"),
        ), seed=seed)
        net = build_network(spec)
        x = CounterRng(seed, stream=12).uniform(d0, -1, 1)
        out = network_forward(net, x)

        h = x
        for layer in net.layers:
            pre = expand_to_dense(layer.weights) @ h + layer.weights.b
            h = np.maximum(pre, 0.0) if layer.spec.activation == "relu" else pre
        np.testing.assert_allclose(out, h, atol=1e-12)

        target = np.zeros(d2)
        assert abs(loss_eval("mse", out, target) - loss_eval("mse", h, target)) <= 1e-12


def test_forward_shape_error_names_layer():
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=3, out_dim=4),
        LayerSpec(kind="dense", in_dim=4, out_dim=2),
    ), seed=1)
    net = build_network(spec)
    with pytest.raises(ShapeError) as err:
        network_forward(net, np.zeros(5))
    assert "layer 0" in str(err.value)


def test_loss_eval_examples():
    p = np.array([0.3, -1.2, 4.0])
    assert loss_eval("mse", p, p) == 0.0
    assert loss_eval("mse", np.array([1.0, 2.0]), np.array([0.0, 0.0])) == 2.5
    for c in (2, 5):
        logits = np.full(c, 0.7)
        one_hot = np.zeros(c)
        one_hot[c - 1] = 1.0
        assert abs(loss_eval("cross_entropy", logits, one_hot) - math.log(c)) < 1e-12


def test_loss_eval_errors():
    with pytest.raises(ShapeError):
        loss_eval("mse", np.zeros(3), np.zeros(4))
    with pytest.raises(ParameterError):
        loss_eval("cross_entropy", np.zeros(3), np.array([0.5, 0.5, 0.0]))
    with pytest.raises(ParameterError):
        loss_eval("cross_entropy", np.zeros(3), np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ParameterError):
        loss_eval("huber", np.zeros(3), np.zeros(3))


def test_cross_entropy_is_stable_at_huge_logits():
    loss = loss_eval("cross_entropy", np.array([1e4, 0.0]), np.array([1.0, 0.0]))
    assert math.isfinite(loss) and loss < 1e-12


def test_backward_zero_when_prediction_hits_target():
    net = _single_dense([[0.5, -0.5], [1.0, 2.0]], [0.1, -0.2])
    x = np.array([1.0, 2.0])
    target = network_forward(net, x)
    grads = network_backward(net, x, target, "mse")
    for g in grads:
        for arr in g.values():
            assert np.all(arr == 0.0)


def test_gradients_match_finite_differences_all_kinds():
    checked = 0
    seed = 100
    while checked < 12:
        seed += 1
        kind = ("dense", "crosswise", "crosswise_mixed")[seed % 3]
        loss_kind = "cross_entropy" if seed % 2 else "mse"
        spec = NetworkSpec(layers=(
            LayerSpec(kind=kind, in_dim=5, out_dim=6, activation="relu"),
            LayerSpec(kind=kind, in_dim=6, out_dim=3,
                      activation="softmax_output" if loss_kind == "cross_entropy"
                      else "identity"),
        ), seed=seed)
        net = build_network(spec)
        x = CounterRng(seed, stream=13).uniform(5, -1, 1)
        if loss_kind == "cross_entropy":
            target = np.zeros(3)
            target[seed % 3] = 1.0
        else:
            target = CounterRng(seed, stream=14).uniform(3, -1, 1)
        if _near_kink(net, x):
            continue
        checked += 1
        grads = network_backward(net, x, target, loss_kind)
        for li, layer in enumerate(net.layers):
            for name, param in layer.params().items():
                flat = param.reshape(-1)
                analytic = grads[li][name].reshape(-1)

                def loss_of(values):
                    saved = flat.copy()
                    flat[:] = values
                    out = loss_eval(loss_kind, network_forward(net, x), target)
                    flat[:] = saved
                    return out

                numeric = central_difference(loss_of, flat.copy())
                for a, n in zip(analytic, numeric):
                    assert relative_error(a, n) <= 1e-5


def _near_kink(net, x, margin=1e-4):
    h = np.asarray(x, dtype=float)
    for layer in net.layers:
        out, cache = layer.forward(h)
        if layer.spec.activation == "relu":
            if layer.kind == "dense":
                pre = cache[1]
            else:
                from crosswise.diagonal import _pre_activation
                pre = _pre_activation(layer.weights, cache)
            if np.min(np.abs(pre)) < margin:
                return True
        h = out
    return False


def test_crosswise_grad_equals_dense_twin_diagonal():
    seed = 5
    spec = NetworkSpec(layers=(
        LayerSpec(kind="crosswise", in_dim=4, out_dim=8, activation="identity"),
    ), seed=seed)
    net = build_network(spec)
    w = net.layers[0].weights
    x = CounterRng(seed, stream=15).uniform(4, -1, 1)
    target = np.zeros(8)
    grad_c = network_backward(net, x, target, "mse")[0]["c"]

    dense_twin = _single_dense(expand_to_dense(w), w.b)
    grad_w = network_backward(dense_twin, x, target, "mse")[0]["w"]
    for r in range(8):
        assert grad_c[r] == grad_w[r, r % 4]


def test_sgd_step_examples():
    net = _single_dense([[1.0]], [0.0])
    grads = [{"w": np.array([[2.0]]), "b": np.array([0.0])}]
    sgd_step(net, grads, 0.1)
    assert net.layers[0].w[0, 0] == pytest.approx(0.8)

    frozen = _single_dense([[1.0, 2.0]], [3.0])
    before_w = frozen.layers[0].w.copy()
    sgd_step(frozen, [{"w": np.zeros((1, 2)), "b": np.zeros(1)}], 0.0)
    np.testing.assert_array_equal(frozen.layers[0].w, before_w)

    with pytest.raises(ShapeError):
        sgd_step(net, [{"w": np.zeros((2, 2)), "b": np.zeros(1)}], 0.1)


def test_sgd_step_determinism():
    outs = []
    for _ in range(2):
        spec = NetworkSpec(layers=(LayerSpec(kind="dense", in_dim=3, out_dim=2),), seed=4)
        net = build_network(spec)
        grads = network_backward(net, np.ones(3), np.zeros(2), "mse")
        sgd_step(net, grads, 0.05)
        outs.append((net.layers[0].w.copy(), net.layers[0].b.copy()))
    np.testing.assert_array_equal(outs[0][0], outs[1][0])
    np.testing.assert_array_equal(outs[0][1], outs[1][1])


def test_single_parameter_quadratic_step_reduces_loss():
    # loss(w) = w^2 / 2 has gradient w; one step at lr=0.5 from w=1.
    net = _single_dense([[1.0]], [0.0])
    before = 0.5 * net.layers[0].w[0, 0] ** 2
    sgd_step(net, [{"w": np.array([[net.layers[0].w[0, 0]]]), "b": np.zeros(1)}], 0.5)
    after = 0.5 * net.layers[0].w[0, 0] ** 2
    assert after < before


def test_train_zero_epochs():
    data = gen_blobs(seed=2, samples_per_class=10, dims=3, class_count=2, spread=0.2)
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=3, out_dim=2, activation="softmax_output"),
    ), seed=0)
    net = build_network(spec)
    w_before = net.layers[0].w.copy()
    cfg = TrainConfig(learning_rate=0.1, epochs=0, batch_size=4,
                      loss="cross_entropy", seed=0)
    history = train_network(net, cfg, data)
    assert history == []
    np.testing.assert_array_equal(net.layers[0].w, w_before)


def test_train_deterministic_histories():
    data = gen_blobs(seed=3, samples_per_class=20, dims=4, class_count=2, spread=0.3)
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=4, out_dim=6, activation="relu"),
        LayerSpec(kind="dense", in_dim=6, out_dim=2, activation="softmax_output"),
    ), seed=1)
    cfg = TrainConfig(learning_rate=0.1, epochs=5, batch_size=8,
                      loss="cross_entropy", seed=2)
    a = train(spec, cfg, data)
    b = train(spec, cfg, data)
    assert [(r.epoch, r.train_loss, r.train_accuracy) for r in a] == [
        (r.epoch, r.train_loss, r.train_accuracy) for r in b
    ]
    assert [r.epoch for r in a] == [1, 2, 3, 4, 5]
    assert all(math.isfinite(r.train_loss) for r in a)


def test_train_threads_match_single_thread():
    data = gen_blobs(seed=4, samples_per_class=15, dims=4, class_count=2, spread=0.3)
    spec = NetworkSpec(layers=(
        LayerSpec(kind="crosswise_mixed", in_dim=4, out_dim=8, activation="relu"),
        LayerSpec(kind="crosswise_mixed", in_dim=8, out_dim=2, activation="softmax_output"),
    ), seed=1)
    cfg = TrainConfig(learning_rate=0.1, epochs=3, batch_size=10,
                      loss="cross_entropy", seed=5)
    net_a = build_network(spec)
    hist_a = train_network(net_a, cfg, data, threads=1)
    net_b = build_network(spec)
    hist_b = train_network(net_b, cfg, data, threads=4)
    assert [(r.train_loss, r.train_accuracy) for r in hist_a] == [
        (r.train_loss, r.train_accuracy) for r in hist_b
    ]
    for la, lb in zip(net_a.layers, net_b.layers):
        np.testing.assert_array_equal(la.weights.c, lb.weights.c)


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_train_divergence_names_epoch():
    data = gen_blobs(seed=1, samples_per_class=100, dims=4, class_count=2, spread=0.3)
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=4, out_dim=8, activation="relu"),
        LayerSpec(kind="dense", in_dim=8, out_dim=2, activation="identity"),
    ), seed=0)
    cfg = TrainConfig(learning_rate=100.0, epochs=50, batch_size=16, loss="mse", seed=0)
    with pytest.raises(DivergenceError) as err:
        train(spec, cfg, data)
    assert "epoch 1" in str(err.value)


def test_train_validates_dimensions():
    data = gen_blobs(seed=2, samples_per_class=5, dims=3, class_count=2, spread=0.2)
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=4, out_dim=2, activation="softmax_output"),
    ), seed=0)
    cfg = TrainConfig(learning_rate=0.1, epochs=1, batch_size=2,
                      loss="cross_entropy", seed=0)
    with pytest.raises(ShapeError):
        train(spec, cfg, data)
    with pytest.raises(ParameterError):
        TrainConfig(learning_rate=0.1, epochs=1, batch_size=0,
                    loss="cross_entropy", seed=0)
    small = gen_blobs(seed=2, samples_per_class=2, dims=4, class_count=2, spread=0.2)
    ok_spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=4, out_dim=2, activation="softmax_output"),
    ), seed=0)
    big_batch = TrainConfig(learning_rate=0.1, epochs=1, batch_size=10,
                            loss="cross_entropy", seed=0)
    with pytest.raises(ParameterError):
        train(ok_spec, big_batch, small)


def test_regression_training_with_mse():
    rng = CounterRng(17)
    features = rng.uniform(40, -1, 1).reshape(20, 2)
    labels = features @ np.array([0.5, -0.25])
    data = Dataset(features=features, labels=labels, class_count=0)
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=2, out_dim=1, activation="identity"),
    ), seed=3)
    cfg = TrainConfig(learning_rate=0.2, epochs=40, batch_size=5, loss="mse", seed=1)
    history = train(spec, cfg, data)
    assert history[-1].train_loss < 1e-3
    assert history[-1].train_accuracy == 0.0  # accuracy is a classification notion


def _spec_of(kind, n, m):
    return NetworkSpec(layers=(LayerSpec(kind=kind, in_dim=n, out_dim=m),), seed=0)


def test_count_weights_examples():
    assert count_weights(_spec_of("dense", 4, 8)).total_weights == 32
    assert count_weights(_spec_of("crosswise", 4, 8)).total_weights == 8
    for n in (2, 3, 17, 1024):
        assert count_weights(_spec_of("crosswise", n, n)).total_weights == n
    counts = count_weights(_spec_of("crosswise", 4, 8))
    assert counts.biases == [8]
    two = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=4, out_dim=8),
        LayerSpec(kind="crosswise", in_dim=8, out_dim=3),
    ), seed=0)
    assert count_weights(two).weights == [32, 8]
    assert count_weights(two).total_biases == 11


def test_count_mults_examples():
    assert count_mults(_spec_of("dense", 4, 8)).total_mults == 32
    assert count_mults(_spec_of("crosswise", 4, 8)).total_mults == 8
    assert count_mults(_spec_of("crosswise", 3, 7)).total_mults == 9
    mixed = count_mults(_spec_of("crosswise_mixed", 5, 9))
    # pad = 8: 8 sign flips + ceil(9/8)*8 = 16 diagonal products; 8*log2(8) butterflies.
    assert mixed.mults == [24]
    assert mixed.fwht_ops == [24]
    assert count_mults(_spec_of("dense", 4, 8)).fwht_ops == [0]


def test_model_json_roundtrip():
    spec = NetworkSpec(layers=(
        LayerSpec(kind="dense", in_dim=3, out_dim=5, activation="relu"),
        LayerSpec(kind="crosswise", in_dim=5, out_dim=4, activation="identity"),
        LayerSpec(kind="crosswise_mixed", in_dim=4, out_dim=2, activation="softmax_output"),
    ), seed=11)
    net = build_network(spec)
    doc = json.loads(json.dumps(model_to_json(net)))
    assert doc["version"] == 1
    assert [entry["type"] for entry in doc["layers"]] == [
        "dense", "crosswise", "crosswise_mixed",
    ]
    restored = model_from_json(doc, seed=11)
    x = CounterRng(12).uniform(3, -1, 1)
    np.testing.assert_array_equal(network_forward(net, x), network_forward(restored, x))


def test_model_json_rejects_unknown():
    with pytest.raises(ParameterError):
        model_from_json({"version": 2, "layers": []})
    with pytest.raises(ParameterError):
        model_from_json({"version": 1, "layers": [{"type": "conv", "n": 1, "m": 1}]})
