import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddlearn.errors import ConfigError, DimensionError, SchemaError, StateError
from ddlearn.nn import (Adam, AdamState, Parameter, Tensor, adam_step, conv2d, finite_diff_grad,
                        l2_normalize, linear, load_checkpoint, log_softmax, masked_logsumexp,
                        max_relative_error, maxpool2d, no_grad, relu, save_checkpoint, softmax,
                        tensor)


def conv_loop_oracle(x, w, b):
    # direct 4-loop summation, independent of the kernels
    nb, c, _, width = x.shape
    co, _, _, k = w.shape
    out = np.zeros((nb, co, 1, width - k + 1))
    for i in range(nb):
        for o in range(co):
            for t in range(width - k + 1):
                s = b[o]
                for ch in range(c):
                    for j in range(k):
                        s += x[i, ch, 0, t + j] * w[o, ch, 0, j]
                out[i, o, 0, t] = s
    return out


# -- conv ---------------------------------------------------------------------

def test_conv_hand_example():
    out = conv2d(np.array([1.0, 2, 3]).reshape(1, 1, 1, 3), np.ones((1, 1, 1, 2)), np.zeros(1))
    assert out.data.reshape(-1).tolist() == [3.0, 5.0]


def test_conv_zero_kernel_gives_bias():
    out = conv2d(np.random.default_rng(0).normal(size=(2, 3, 1, 10)), np.zeros((4, 3, 1, 5)),
                 np.full(4, 7.0))
    assert np.all(out.data == 7.0)


def test_conv_dsads_shape():
    out = conv2d(np.zeros((64, 45, 1, 125)), np.zeros((16, 45, 1, 9)), np.zeros(16))
    assert out.shape == (64, 16, 1, 117)


@settings(max_examples=60, deadline=None)
@given(b=st.integers(1, 4), c=st.integers(1, 4), co=st.integers(1, 4), w=st.integers(1, 16),
       k=st.integers(1, 16), seed=st.integers(0, 2**31))
def test_conv_matches_loop_oracle(b, c, co, w, k, seed):
    if k > w:
        k = w
    r = np.random.default_rng(seed)
    x, wt, bias = r.normal(size=(b, c, 1, w)), r.normal(size=(co, c, 1, k)), r.normal(size=co)
    np.testing.assert_allclose(conv2d(x, wt, bias).data, conv_loop_oracle(x, wt, bias),
                               rtol=0, atol=1e-12)


@pytest.mark.parametrize("xs, ws, bs, axis", [
    ((1, 3, 1, 8), (2, 4, 1, 3), (2,), "channel"),
    ((1, 3, 1, 8), (2, 3, 1, 3), (3,), "bias"),
    ((1, 3, 2, 8), (2, 3, 1, 3), (2,), "height"),
    ((1, 3, 1, 2), (2, 3, 1, 3), (2,), "width"),
])
def test_conv_shape_errors_name_axis(xs, ws, bs, axis):
    with pytest.raises(DimensionError, match=axis):
        conv2d(np.zeros(xs), np.zeros(ws), np.zeros(bs))


# -- relu / pool / fc -----------------------------------------------------------

def test_relu_examples():
    assert relu(np.array([-1.0, 0.0, 2.0])).data.tolist() == [0.0, 0.0, 2.0]
    assert np.all(relu(-np.arange(1.0, 5.0)).data == 0)
    x = np.arange(5.0)
    assert np.array_equal(relu(x).data, x)


def test_maxpool_examples():
    assert maxpool2d(np.array([1.0, 3, 2, 2]).reshape(1, 1, 1, 4)).data.ravel().tolist() == [3, 2]
    assert maxpool2d(np.array([5.0, 1, 4, 2, 9]).reshape(1, 1, 1, 5)).data.ravel().tolist() == [5, 4]
    const = maxpool2d(np.full((2, 3, 1, 10), 4.5)).data
    assert const.shape == (2, 3, 1, 5) and np.all(const == 4.5)
    with pytest.raises(DimensionError):
        maxpool2d(np.zeros((1, 1, 1, 1)))


def test_maxpool_backward_routes_to_argmax_and_left_on_ties():
    x = tensor(np.array([1.0, 3, 2, 2, 7]).reshape(1, 1, 1, 5), requires_grad=True)
    maxpool2d(x).sum().backward()
    assert x.grad.ravel().tolist() == [0, 1, 1, 0, 0]


def test_linear_examples():
    x = np.array([[1.0, 2.0]])
    assert linear(x, np.array([[1.0, 1], [0, 1]]), np.array([0.0, 1])).data.tolist() == [[3, 3]]
    r = np.random.default_rng(1).normal(size=(3, 4))
    np.testing.assert_array_equal(linear(r, np.eye(4), np.zeros(4)).data, r)
    assert np.all(linear(r, np.zeros((2, 4)), np.array([5.0, -1])).data == [5, -1])
    with pytest.raises(DimensionError):
        linear(r, np.zeros((2, 5)), np.zeros(2))


# -- softmax ----------------------------------------------------------------------

def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.zeros((1, 8))).data, np.full((1, 8), 1 / 8), atol=1e-15)
    np.testing.assert_allclose(softmax(np.array([[0.0, math.log(3)]])).data, [[0.25, 0.75]],
                               atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.floats(-50, 50))
def test_softmax_rows_and_shift_invariance(seed, c):
    z = np.random.default_rng(seed).normal(scale=10, size=(5, 7))
    s = softmax(z).data
    assert np.all(s >= 0)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)
    s2 = softmax(z + c).data
    np.testing.assert_allclose(s2, s, atol=1e-12)
    assert np.array_equal(s2.argmax(axis=1), s.argmax(axis=1))


def test_softmax_extreme_logits_finite():
    s = softmax(np.array([[1e4, -1e4, 0.0]])).data
    assert np.all(np.isfinite(s))
    np.testing.assert_allclose(log_softmax(np.array([[1e4, -1e4]])).data, [[0.0, -2e4]])


# -- backward --------------------------------------------------------------------------

def test_backward_simple_rules():
    x = tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    x.sum().backward()
    assert x.grad.tolist() == [1, 1, 1]
    y = tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    ((y * y).sum() * 0.5).backward()
    assert y.grad.tolist() == [1, -2, 3]


def test_backward_accumulates_until_zeroed():
    p = Parameter(np.array([2.0]))
    assert p.grad.tolist() == [0.0]
    for _ in range(3):
        (p * p).sum().backward()
    assert p.grad.tolist() == [12.0]
    p.zero_grad()
    assert p.grad.tolist() == [0.0]


def test_backward_errors():
    with pytest.raises(StateError):
        Tensor(np.ones(3)).sum().backward()
    p = Parameter(np.ones(3))
    with pytest.raises(DimensionError):
        (p * 2.0).backward()


def test_no_grad_records_nothing():
    p = Parameter(np.ones(2))
    with no_grad():
        out = (p * 3.0).sum()
    assert not out.requires_grad
    with pytest.raises(StateError):
        out.backward()


def test_non_finite_input_rejected():
    with pytest.raises(Exception):
        tensor(np.array([1.0, np.nan]))


def test_masked_logsumexp_and_l2_normalize_gradients():
    r = np.random.default_rng(3)
    x = Parameter(r.normal(size=(4, 5)))
    mask = r.random((4, 5)) > 0.3
    mask[0] = False
    for fn in (lambda: masked_logsumexp(x, mask).sum(),
               lambda: (l2_normalize(x) * np.arange(5.0)).sum()):
        x.zero_grad()
        fn().backward()
        with no_grad():
            num = finite_diff_grad(lambda: float(fn().data), [x])
        assert max_relative_error([x.grad], num) < 1e-6


def test_l2_normalize_zero_row_stays_finite():
    x = Parameter(np.zeros((2, 3)))
    out = l2_normalize(x)
    assert np.all(out.data == 0)
    out.sum().backward()
    assert np.all(np.isfinite(x.grad))


# -- Adam ----------------------------------------------------------------------------

def test_adam_zero_grad_leaves_param():
    p = Parameter(np.array([1.0, -2.0]))
    st_ = AdamState.zeros_like(p)
    adam_step(p, st_, lr=1e-3)
    assert p.data.tolist() == [1.0, -2.0] and st_.t == 1


def test_adam_first_step_is_lr():
    # bias-corrected first step: lr * g / (|g| + eps) ~= lr * sign(g)
    p = Parameter(np.array([0.5, 0.5]))
    p.grad[...] = [3.0, -0.02]
    adam_step(p, AdamState.zeros_like(p), lr=8e-4)
    step = 0.5 - p.data
    expected = 8e-4 * np.array([3.0, -0.02]) / (np.abs([3.0, -0.02]) + 1e-8)
    np.testing.assert_allclose(step, expected, rtol=1e-12)
    np.testing.assert_allclose(np.abs(step), 8e-4, rtol=1e-6)


def test_adam_identical_params_identical_updates():
    a, b = Parameter(np.ones(3)), Parameter(np.ones(3))
    opt = Adam([a, b], lr=0.01)
    for k in range(5):
        a.grad[...] = b.grad[...] = np.array([1.0, -1.0, 0.5]) * (k + 1)
        opt.step()
    assert np.array_equal(a.data, b.data)
    assert np.all(opt.states[0].v >= 0)


def test_adam_errors():
    p = Parameter(np.ones(2))
    with pytest.raises(ConfigError):
        adam_step(p, AdamState.zeros_like(p), lr=0.0)
    with pytest.raises(DimensionError):
        adam_step(p, AdamState.zeros_like(Parameter(np.ones(3))), lr=0.1)


# -- finite differences --------------------------------------------------------------

def test_finite_diff_examples():
    p = Parameter(np.array([3.0]))
    g = finite_diff_grad(lambda: float(p.data[0] ** 2), [p], h=1e-5)
    assert abs(g[0][0] - 6.0) < 1e-8
    q = Parameter(np.arange(4.0))
    assert np.all(np.abs(finite_diff_grad(lambda: 2.5, [q])[0]) < 1e-9)
    with pytest.raises(ConfigError):
        finite_diff_grad(lambda: 0.0, [q], h=0)


def test_finite_diff_vector_output_adds_trailing_axis():
    p = Parameter(np.array([1.0, 2.0]))
    g = finite_diff_grad(lambda: np.array([p.data.sum(), (p.data ** 2).sum()]), [p])
    np.testing.assert_allclose(g[0], [[1, 2], [1, 4]], atol=1e-8)


# -- checkpoint ------------------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    params = {"a": Parameter(np.random.default_rng(0).normal(size=(2, 3))),
              "b": Parameter(np.array([1e-300, -0.1]))}
    path = tmp_path / "ck.json"
    save_checkpoint(path, params, {"note": "x"})
    header, values = load_checkpoint(path)
    assert header["note"] == "x"
    for k in params:
        assert np.array_equal(values[k], params[k].data)


def test_checkpoint_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "other"}')
    with pytest.raises(SchemaError):
        load_checkpoint(bad)
    bad.write_text("not json")
    with pytest.raises(SchemaError):
        load_checkpoint(bad)
