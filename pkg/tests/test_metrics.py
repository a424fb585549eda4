import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddlearn.errors import InputError
from ddlearn.metrics import evaluate, mean_std


def test_perfect_predictions():
    r = evaluate([0, 1, 2, 2], [0, 1, 2, 2], 3)
    assert r.accuracy == 1.0
    assert np.array_equal(r.confusion, np.diag([1, 1, 2]))
    assert r.f1.tolist() == [1, 1, 1]


def test_single_class_predictions():
    r = evaluate([0, 0, 0, 0], [0, 0, 1, 1], 2)
    assert r.accuracy == 0.5
    assert r.recall[0] == 1.0 and r.precision[0] == 0.5
    assert r.precision[1] == 0 and r.recall[1] == 0 and r.f1[1] == 0


def test_absent_class_flagged():
    r = evaluate([0, 1], [0, 1], 3)
    assert r.undefined.tolist() == [False, False, True]
    assert (r.precision[2], r.recall[2], r.f1[2]) == (0, 0, 0)
    assert r.to_dict()["undefined_classes"] == [2]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 6), st.integers(1, 50))
def test_report_invariants(seed, k, n):
    r = np.random.default_rng(seed)
    y, p = r.integers(0, k, n), r.integers(0, k, n)
    rep = evaluate(p, y, k)
    assert np.array_equal(rep.confusion.sum(axis=1), np.bincount(y, minlength=k))
    assert rep.accuracy == np.trace(rep.confusion) / n
    for c in range(k):
        pr, rc = rep.precision[c], rep.recall[c]
        expect = 0.0 if pr + rc == 0 else 2 * pr * rc / (pr + rc)
        assert abs(rep.f1[c] - expect) < 1e-12


def test_errors():
    with pytest.raises(InputError):
        evaluate([], [], 2)
    with pytest.raises(InputError):
        evaluate([0, 3], [0, 1], 2)


def test_mean_std():
    assert mean_std([0.7, 0.7, 0.7]) == (0.7, 0.0)
    m, s = mean_std([0.80, 0.82, 0.84])
    assert abs(m - 0.82) < 1e-12 and abs(s - 0.02) < 1e-12
    assert mean_std([0.5]) == (0.5, 0.0)
