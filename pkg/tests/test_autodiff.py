"""Tape tests: primitive forward values and hand-derived gradients,
finite-difference agreement at smooth points, the straight-through
binarizer, and the failure modes (non-finite values, double backward,
cross-tape mixing)."""

import math

import numpy as np
import pytest

import stlinfer.autodiff as ad
from stlinfer.autodiff import NonFiniteError, Tape, gradient_check
from stlinfer.network import ActivationParams, sparse_softmax, time_indicator


def grad_of(f, x):
    """Value and gradient of a scalar-output builder at leaf value x."""
    tape = Tape()
    leaf = tape.leaf(x)
    out = f(leaf)
    tape.backward(out)
    return out.value, tape.grad(leaf)


# ---------------------------------------------------------------------------
# primitive examples


def test_relu_negative_input():
    v, g = grad_of(ad.relu, -2.0)
    assert v == 0.0 and g == 0.0


def test_relu_subgradient_at_zero_is_zero():
    v, g = grad_of(ad.relu, 0.0)
    assert v == 0.0 and g == 0.0


def test_exp_at_zero():
    v, g = grad_of(ad.exp, 0.0)
    assert v == 1.0 and g == 1.0


def test_dot_value_and_gradient():
    tape = Tape()
    a = tape.leaf(np.array([1.0, 2.0]))
    b = tape.leaf(np.array([3.0, 4.0]))
    out = ad.dot(a, b)
    assert out.value == 11.0
    tape.backward(out)
    assert np.array_equal(tape.grad(a), np.array([3.0, 4.0]))
    assert np.array_equal(tape.grad(b), np.array([1.0, 2.0]))


def test_scalar_array_broadcast_gradients():
    tape = Tape()
    s = tape.leaf(2.0)
    v = tape.leaf(np.array([1.0, -3.0, 4.0]))
    out = ad.vsum(ad.mul(s, v))
    tape.backward(out)
    assert tape.grad(s) == 2.0  # sum of the array
    assert np.array_equal(tape.grad(v), np.array([2.0, 2.0, 2.0]))


def test_operator_overloads_match_functions():
    tape = Tape()
    x = tape.leaf(3.0)
    y = tape.leaf(4.0)
    assert (x + y).value == 7.0
    assert (x - y).value == -1.0
    assert (x * y).value == 12.0
    assert (x / y).value == 0.75
    assert (-x).value == -3.0
    assert (1.0 + x).value == 4.0
    assert (1.0 - x).value == -2.0


def test_abs_max_value_and_gradient_routing():
    tape = Tape()
    v = tape.leaf(np.array([-7.0, 3.0, 1.0]))
    out = ad.abs_max(v)
    assert out.value == 3.0
    tape.backward(out)
    assert np.array_equal(tape.grad(v), np.array([0.0, 1.0, 0.0]))


def test_abs_max_of_negative_max():
    tape = Tape()
    v = tape.leaf(np.array([-7.0, -3.0]))
    out = ad.abs_max(v)
    assert out.value == 3.0
    tape.backward(out)
    # |max| with max < 0: gradient carries the sign flip
    assert np.array_equal(tape.grad(v), np.array([0.0, -1.0]))


def test_abs_max_tie_routes_to_first_index():
    tape = Tape()
    v = tape.leaf(np.array([2.0, 2.0]))
    out = ad.abs_max(v)
    tape.backward(out)
    assert np.array_equal(tape.grad(v), np.array([1.0, 0.0]))


def test_minimum_composition():
    tape = Tape()
    a = tape.leaf(np.array([1.0, 5.0]))
    b = tape.leaf(np.array([3.0, 2.0]))
    assert np.array_equal(ad.minimum(a, b).value, np.array([1.0, 2.0]))


def test_stack_scalars():
    tape = Tape()
    xs = [tape.leaf(float(i)) for i in range(3)]
    v = ad.stack(xs)
    assert np.array_equal(v.value, np.array([0.0, 1.0, 2.0]))
    out = ad.dot(v, tape.const(np.array([1.0, 10.0, 100.0])))
    tape.backward(out)
    assert [tape.grad(x) for x in xs] == [1.0, 10.0, 100.0]


# ---------------------------------------------------------------------------
# straight-through binarizer


def test_ste_thresholds_at_half():
    tape = Tape()
    assert ad.ste_binarize(tape.leaf(0.7)).value == 1.0
    assert ad.ste_binarize(tape.leaf(0.2)).value == 0.0
    assert ad.ste_binarize(tape.leaf(0.5)).value == 1.0
    row = ad.ste_binarize(tape.leaf(np.array([0.1, 0.5, 0.9])))
    assert np.array_equal(row.value, np.array([0.0, 1.0, 1.0]))


def test_ste_backward_is_identity():
    tape = Tape()
    c = tape.leaf(np.array([0.2, 0.8]))
    out = ad.dot(ad.ste_binarize(c), tape.const(np.array([3.0, 5.0])))
    tape.backward(out)
    # gradient passes through the binarization unchanged
    assert np.array_equal(tape.grad(c), np.array([3.0, 5.0]))


def test_ste_sampling_mode_is_binary_and_seeded():
    def draw(seed):
        rng = np.random.default_rng(seed)
        tape = Tape()
        return ad.ste_binarize(tape.leaf(np.full(64, 0.5)), rng).value

    a, b = draw(3), draw(3)
    assert set(np.unique(a)) <= {0.0, 1.0}
    assert np.array_equal(a, b)
    assert not np.array_equal(a, draw(4))  # 2^-64 false-alarm odds


# ---------------------------------------------------------------------------
# finite differences


def test_gradient_check_on_square():
    err = gradient_check(lambda x: ad.mul(x, x), np.array(3.0))
    assert err < 1e-6


def test_primitives_match_finite_differences():
    rng = np.random.default_rng(5)
    x = rng.uniform(0.3, 2.0, 6)  # positive and away from relu kinks
    cases = [
        lambda v: ad.vsum(ad.mul(v, v)),
        lambda v: ad.vsum(ad.exp(ad.scale(v, -0.7))),
        lambda v: ad.vsum(ad.relu(ad.sub(v, 1.0))),
        lambda v: ad.vsum(ad.div(1.0, ad.add(v, 2.0))),
        lambda v: ad.dot(v, ad.exp(v)),
        lambda v: ad.abs_max(ad.mul(v, v)),
        lambda v: ad.vsum(ad.minimum(v, ad.scale(v, 0.5))),
    ]
    for f in cases:
        assert gradient_check(f, x) < 1e-5


def test_sparse_softmax_gradient_at_smooth_point():
    p = ActivationParams(beta=8.0, h=1.0)
    w = np.array([1.0, 1.0, 0.0, 1.0])

    def f(v):
        return sparse_softmax(v, v.tape.const(w), p)

    err = gradient_check(f, np.array([0.9, -1.7, 4.0, 2.3]))
    assert err < 1e-4


def test_time_indicator_gradient_wrt_t1():
    weights = np.linspace(0.5, 1.5, 12)

    def f(t1v):
        tape = t1v.tape
        ind = time_indicator(tape, t1v, tape.const(8.0), 1.0, 12)
        return ad.dot(ind, tape.const(weights))

    err = gradient_check(f, np.array(4.5))
    assert err < 1e-4


# ---------------------------------------------------------------------------
# tape mechanics


def test_replay_determinism():
    def run():
        tape = Tape()
        x = tape.leaf(np.array([0.3, 1.7, -2.2]))
        out = ad.vsum(ad.exp(ad.mul(x, ad.relu(x))))
        tape.backward(out)
        return out.value, tape.grad(x)

    v1, g1 = run()
    v2, g2 = run()
    assert v1 == v2
    assert np.array_equal(g1, g2)


def test_backward_twice_is_an_error():
    tape = Tape()
    x = tape.leaf(2.0)
    out = ad.mul(x, x)
    tape.backward(out)
    with pytest.raises(RuntimeError, match="backward already ran"):
        tape.backward(out)


def test_appending_rearms_backward():
    tape = Tape()
    x = tape.leaf(2.0)
    out = ad.mul(x, x)
    tape.backward(out)
    out2 = ad.mul(out, x)
    tape.backward(out2)  # new nodes, second pass allowed
    assert tape.grad(x) == 12.0


def test_backward_requires_scalar_output():
    tape = Tape()
    x = tape.leaf(np.array([1.0, 2.0]))
    with pytest.raises(ValueError, match="scalar"):
        tape.backward(ad.mul(x, x))


def test_grad_before_backward_is_an_error():
    tape = Tape()
    x = tape.leaf(1.0)
    with pytest.raises(RuntimeError, match="no backward"):
        tape.grad(x)


def test_unused_leaf_gets_zero_gradient():
    tape = Tape()
    x = tape.leaf(1.0)
    y = tape.leaf(np.array([1.0, 2.0]))
    out = ad.mul(x, x)
    tape.backward(out)
    assert tape.grad(y).shape == (2,) and not tape.grad(y).any()


def test_vars_from_different_tapes_cannot_mix():
    a = Tape().leaf(1.0)
    b = Tape().leaf(2.0)
    with pytest.raises(ValueError, match="different tapes"):
        ad.add(a, b)


def test_non_finite_forward_names_the_node():
    tape = Tape()
    x = tape.leaf(1000.0)
    with pytest.raises(NonFiniteError, match=r"op 'exp' at node \d+"):
        ad.exp(x)


def test_non_finite_array_detected():
    tape = Tape()
    x = tape.leaf(np.array([1.0, 710.0]))
    with pytest.raises(NonFiniteError, match="exp"):
        ad.exp(x)


def test_leaf_rejects_bad_shapes():
    tape = Tape()
    with pytest.raises(ValueError, match="scalars or flat arrays"):
        tape.leaf(np.zeros((2, 2)))
    with pytest.raises(TypeError, match="raw value"):
        tape.leaf(tape.leaf(1.0))


def test_dot_shape_mismatch():
    tape = Tape()
    with pytest.raises(ValueError, match="equal length"):
        ad.dot(tape.leaf(np.array([1.0, 2.0])), tape.leaf(np.array([1.0, 2.0, 3.0])))


def test_stack_rejects_arrays_and_empty():
    tape = Tape()
    with pytest.raises(ValueError, match="scalar"):
        ad.stack([tape.leaf(np.array([1.0, 2.0]))])
    with pytest.raises(ValueError, match="zero vars"):
        ad.stack([])


def test_gradient_check_requires_scalar_function():
    with pytest.raises(ValueError, match="scalar"):
        gradient_check(lambda v: ad.mul(v, v), np.array([1.0, 2.0]))
