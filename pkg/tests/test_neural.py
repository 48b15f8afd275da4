import json

import numpy as np
import pytest

from cycleplanner.neural import (
    Adam, AdamState, CheckpointError, Mlp, adam_step, from_dict, load_weights, save_weights, soft_update,
    to_dict,
)
from oracles import directional_check, random_network


def linear(w, b, output="identity"):
    net = Mlp([1, 1], output, 0)
    net.weights[0][:] = w
    net.biases[0][:] = b
    return net


def test_forward_examples():
    net = Mlp([3, 4, 2], rng=0)
    for p in net.params():
        p[...] = 0
    assert np.array_equal(net(np.ones(3)), np.zeros(2))
    assert linear(2, 1)(np.array([3.0]))[0] == 7
    assert linear(100, 0, "tanh")(np.array([1.0]))[0] == pytest.approx(1.0)
    assert linear(100, 0, "tanh")(np.array([1.0]))[0] <= 1.0


def test_batch_and_vector_agree():
    net = Mlp([4, 8, 3], "tanh", 1)
    x = np.random.default_rng(0).normal(size=(5, 4))
    np.testing.assert_allclose(net(x)[2], net(x[2]))
    with pytest.raises(ValueError):
        net(np.ones(5))


def test_backward_examples():
    grads, gx = linear(2.0, 0.0).gradients(np.array([3.0]), np.array([1.0]))
    assert grads[0][0, 0] == 3 and grads[1][0] == 1 and gx[0] == 2
    net = Mlp([1, 1, 1], rng=0)
    net.weights[0][:] = -1.0  # hidden unit sees a negative preactivation for x > 0
    grads, gx = net.gradients(np.array([2.0]), np.array([1.0]))
    assert grads[0][0, 0] == 0 and gx[0] == 0


def test_initialisation_bounds():
    net = Mlp([10, 20, 5], rng=3)
    assert np.abs(net.weights[0]).max() <= np.sqrt(6 / 10)
    assert np.abs(net.weights[1]).max() <= np.sqrt(6 / 25)
    assert all(not b.any() for b in net.biases)
    assert net.weights[0].dtype == np.float64


@pytest.mark.parametrize("widths, out", [([7, 8, 8, 8, 1], "tanh"), ([9, 8, 8, 8, 1], "identity"),
                                         ([24, 200, 200, 100, 1], "tanh")])
def test_gradient_matches_finite_differences(widths, out):
    rng = np.random.default_rng(0)
    for _ in range(3):
        assert directional_check(random_network(widths, out, rng), rng) < 1e-4


def test_adam_examples():
    p = [np.array([1.0, -2.0])]
    st = AdamState.for_params(p)
    adam_step(p, [np.zeros(2)], st, 0.1)
    assert np.array_equal(p[0], [1.0, -2.0])

    p = [np.array([0.5])]
    opt = Adam(p, 1e-3)
    opt.step([np.array([4.0])])
    # first step: m_hat = g, v_hat = g^2, so the move is lr * g / (|g| + eps)
    assert p[0][0] == pytest.approx(0.5 - 1e-3 * 4.0 / (4.0 + 1e-8), abs=1e-9)
    with pytest.raises(ValueError):
        opt.step([np.zeros(2)])


def test_soft_update_examples():
    online = linear(1.0, 1.0)
    target = linear(0.0, 0.0)
    soft_update(target, online, 0.0)
    assert target.weights[0][0, 0] == 0
    soft_update(target, online, 1e-4)
    assert target.weights[0][0, 0] == pytest.approx(1e-4)
    soft_update(target, online, 1.0)
    assert target.weights[0][0, 0] == 1.0
    with pytest.raises(ValueError):
        soft_update(Mlp([2, 1], rng=0), online, 0.5)


def test_save_load_roundtrip(tmp_path):
    net = Mlp([5, 16, 16, 2], "tanh", 4)
    save_weights(net, tmp_path / "n.json")
    again = load_weights(tmp_path / "n.json")
    x = np.random.default_rng(1).normal(size=(100, 5))
    assert np.array_equal(net(x), again(x))


def test_load_errors(tmp_path):
    net = Mlp([3, 4, 1], rng=0)
    save_weights(net, tmp_path / "n.json")
    text = (tmp_path / "n.json").read_text()
    (tmp_path / "cut.json").write_text(text[: len(text) // 2])
    with pytest.raises(CheckpointError):
        load_weights(tmp_path / "cut.json")
    d = to_dict(net)
    d["widths"] = [3, 5, 1]
    with pytest.raises(CheckpointError, match="declared widths"):
        from_dict(json.loads(json.dumps(d)))
    d = to_dict(net)
    d["weights"].pop()
    with pytest.raises(CheckpointError):
        from_dict(d)
