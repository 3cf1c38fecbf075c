import math

import numpy as np
import pytest

import hqml.autodiff as ad
from hqml.autodiff import (DifferentiationError, LabelError, ShapeError, Tensor,
                           quantum_expectations)
from hqml.qsim import Circuit, Slot

from conftest import assert_matches_finite_diff


def test_matmul_example():
    out = ad.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([1.0, 1.0]))
    assert np.array_equal(out.data, [3.0, 7.0])


def test_concat_order():
    a = Tensor(np.arange(6.0))
    b = Tensor(np.arange(8.0) + 100)
    out = ad.concat([a, b])
    assert out.data.shape == (14,)
    assert np.array_equal(out.data[:6], a.data)
    assert np.array_equal(out.data[6:], b.data)


def test_elementwise_multiply_annihilator():
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    out = ad.mul(x, Tensor(np.zeros(3)))
    assert np.array_equal(out.data, np.zeros(3))


def test_slice_vec():
    x = Tensor(np.arange(5.0), requires_grad=True)
    out = ad.slice_vec(x, 1, 4)
    assert np.array_equal(out.data, [1.0, 2.0, 3.0])
    loss = ad.matmul(out, Tensor(np.ones(3)))
    loss.backward()
    assert np.array_equal(x.grad, [0, 1, 1, 1, 0])
    with pytest.raises(ShapeError):
        ad.slice_vec(x, 3, 9)


def test_sigmoid_values():
    out = ad.sigmoid(Tensor(np.array([0.0, -1000.0, 1.0])))
    assert out.data[0] == pytest.approx(0.5)
    assert out.data[1] == 0.0
    assert out.data[2] == pytest.approx(0.7310585786, abs=1e-10)
    assert np.all(np.isfinite(out.data))


def test_tanh_values():
    out = ad.tanh_act(Tensor(np.array([0.0, 1.0])))
    assert out.data[0] == 0.0
    assert out.data[1] == pytest.approx(0.7615941560, abs=1e-10)
    x = np.linspace(-3, 3, 11)
    pos = ad.tanh_act(Tensor(x)).data
    neg = ad.tanh_act(Tensor(-x)).data
    np.testing.assert_allclose(pos, -neg, atol=1e-15)


def test_tanh_matches_its_formula():
    x = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(ad.tanh_act(Tensor(x)).data,
                               2.0 / (1.0 + np.exp(-2.0 * x)) - 1.0, atol=1e-15)


def test_softmax_xent_uniform_cases():
    assert ad.softmax_xent(Tensor([0.0, 0.0]), 0).data == pytest.approx(math.log(2))
    for label in range(4):
        loss = ad.softmax_xent(Tensor([0.0, 0.0, 0.0, 0.0]), label)
        assert loss.data == pytest.approx(math.log(4))


def test_softmax_xent_direct_value():
    # frozen from the direct formula: ln(1 + e^-1 + e^-2)
    loss = ad.softmax_xent(Tensor([2.0, 1.0, 0.0]), 0)
    assert loss.data == pytest.approx(0.40760596444438064, abs=1e-12)


def test_softmax_xent_label_out_of_range():
    with pytest.raises(LabelError):
        ad.softmax_xent(Tensor([0.0, 1.0]), 2)
    with pytest.raises(LabelError):
        ad.softmax_xent(Tensor([[0.0, 1.0]]), np.array([5]))


def test_softmax_xent_large_logits_stable():
    loss = ad.softmax_xent(Tensor([1e8, 0.0]), 1)
    assert np.isfinite(loss.data)


def test_softmax_properties(rng):
    for _ in range(50):
        logits = rng.normal(scale=5, size=int(rng.integers(2, 8)))
        probs = ad.softmax(logits)
        assert abs(probs.sum() - 1.0) < 1e-12
        assert np.all(probs > 0) and np.all(probs < 1)


def test_backward_linear():
    w = Tensor(np.array(2.0), requires_grad=True)
    loss = ad.mul(w, Tensor(np.array(3.0)))
    loss.backward()
    assert w.grad == pytest.approx(3.0)


def test_backward_sigmoid_chain_rule():
    # loss = sigmoid(w * x) at w = 0: dloss/dw = 0.25 x, dloss/dx = 0
    x = Tensor(np.array(3.0), requires_grad=True)
    w = Tensor(np.array(0.0), requires_grad=True)
    loss = ad.sigmoid(ad.mul(w, x))
    loss.backward()
    assert w.grad == pytest.approx(0.25 * 3.0)
    assert x.grad == pytest.approx(0.0)


def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ShapeError):
        ad.mul(x, x).backward()


def test_unreachable_leaf_gets_zero_gradient():
    used = Tensor(np.array(1.5), requires_grad=True)
    unused = Tensor(np.ones(4), requires_grad=True)
    loss = ad.mul(used, used)
    grads = ad.gradients(loss, [used, unused])
    assert grads[0] == pytest.approx(3.0)
    assert np.array_equal(grads[1], np.zeros(4))


def test_fanout_accumulates_gradients():
    x = Tensor(np.array(2.0), requires_grad=True)
    loss = ad.add(ad.mul(x, x), x)  # x^2 + x -> 2x + 1 = 5
    loss.backward()
    assert x.grad == pytest.approx(5.0)


def test_composite_graph_matches_finite_differences(rng):
    for _ in range(30):
        w1 = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
        b1 = Tensor(rng.normal(size=4), requires_grad=True)
        w2 = Tensor(rng.normal(size=(3, 4)), requires_grad=True)
        x = rng.normal(size=5)
        label = int(rng.integers(0, 3))

        def fn():
            h = ad.tanh_act(ad.add(ad.matmul(w1, Tensor(x)), b1))
            return ad.softmax_xent(ad.matmul(w2, ad.sigmoid(h)), label)

        assert_matches_finite_diff(fn, [w1, b1, w2])


def test_batched_softmax_xent_matches_mean_of_rows(rng):
    logits = rng.normal(size=(6, 3))
    labels = rng.integers(0, 3, size=6)
    batched = ad.softmax_xent(Tensor(logits), labels)
    singles = [float(ad.softmax_xent(Tensor(row), int(lab)).data)
               for row, lab in zip(logits, labels)]
    assert batched.data == pytest.approx(np.mean(singles), abs=1e-12)

    t = Tensor(logits, requires_grad=True)
    ad.softmax_xent(t, labels).backward()

    def fn():
        return ad.softmax_xent(t, labels)

    assert_matches_finite_diff(fn, [t])


def test_tape_replay_is_bitwise_deterministic(rng):
    w = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    x = rng.normal(size=3)

    def run():
        ad.zero_grads([w])
        loss = ad.softmax_xent(ad.tanh_act(ad.matmul(w, Tensor(x))), 1)
        loss.backward()
        return w.grad.copy()

    assert np.array_equal(run(), run())


def test_quantum_node_gradients():
    c = Circuit(1)
    c.rx(0, Slot(0))
    c.measure_z(0)

    def grad_at(theta):
        p = Tensor(np.array([theta]), requires_grad=True)
        out = quantum_expectations(c, p)
        ad.matmul(out, Tensor(np.ones(1))).backward()
        return p.grad[0]

    assert grad_at(0.0) == pytest.approx(0.0, abs=1e-12)
    assert grad_at(np.pi / 2) == pytest.approx(-1.0, abs=1e-12)


def test_quantum_node_unmeasured_wire_zero_gradient():
    c = Circuit(2)
    c.rx(1, Slot(0))  # acts on an unmeasured, unentangled wire
    c.measure_z(0)
    p = Tensor(np.array([0.8]), requires_grad=True)
    out = quantum_expectations(c, p)
    ad.matmul(out, Tensor(np.ones(1))).backward()
    assert p.grad[0] == pytest.approx(0.0, abs=1e-15)


def test_quantum_node_shared_slot(rng):
    # one slot feeding two gates still differentiates exactly
    c = Circuit(1)
    c.rx(0, Slot(0))
    c.ry(0, Slot(1))
    c.rx(0, Slot(0))
    c.measure_z(0)
    theta = rng.uniform(-np.pi, np.pi, 2)
    p = Tensor(theta, requires_grad=True)

    def fn():
        return ad.matmul(quantum_expectations(c, p), Tensor(np.ones(1)))

    assert_matches_finite_diff(fn, [p], rtol=1e-6, atol=1e-8)


def test_quantum_node_grad_slots_filter():
    c = Circuit(1)
    c.rx(0, Slot(0))
    c.ry(0, Slot(1))
    c.measure_z(0)
    p = Tensor(np.array([0.4, 0.9]), requires_grad=True)
    out = quantum_expectations(c, p, grad_slots={1})
    ad.matmul(out, Tensor(np.ones(1))).backward()
    assert p.grad[0] == 0.0
    assert p.grad[1] != 0.0


def test_parameter_shift_matches_finite_differences_sample(rng):
    from hqml.simcheck import check_parameter_shift
    result = check_parameter_shift(n_circuits=20, seed=int(rng.integers(1 << 30)))
    assert result["passed"], result
