import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ddlearn import _kernels

BACKENDS = _kernels.available_backends()
compiled = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")


@compiled
@settings(max_examples=80, deadline=None)
@given(b=st.integers(1, 5), c=st.integers(1, 6), co=st.integers(1, 6), w=st.integers(2, 40),
       k=st.integers(1, 12), seed=st.integers(0, 2**31))
def test_backends_agree(b, c, co, w, k, seed):
    k = min(k, w)
    r = np.random.default_rng(seed)
    x, wt, bias = r.normal(size=(b, c, w)), r.normal(size=(co, c, k)), r.normal(size=co)
    g = r.normal(size=(b, co, w - k + 1))
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    np.testing.assert_allclose(cy.conv1d_forward(x, wt, bias), py.conv1d_forward(x, wt, bias),
                               rtol=0, atol=1e-12)
    for a, e in zip(cy.conv1d_backward(x, wt, g), py.conv1d_backward(x, wt, g)):
        np.testing.assert_allclose(a, e, rtol=0, atol=1e-11)
    out_c, idx_c = cy.maxpool1d_forward(x)
    out_p, idx_p = py.maxpool1d_forward(x)
    assert np.array_equal(out_c, out_p) and np.array_equal(idx_c, idx_p)
    gp = r.normal(size=out_p.shape)
    assert np.array_equal(cy.maxpool1d_backward(gp, idx_c, w), py.maxpool1d_backward(gp, idx_p, w))


def test_pool_ties_prefer_left_in_every_backend():
    x = np.array([2.0, 2.0, -1.0, -1.0]).reshape(1, 1, 4)
    for mod in BACKENDS.values():
        out, idx = mod.maxpool1d_forward(x)
        grad = mod.maxpool1d_backward(np.ones_like(out), idx, 4)
        assert grad.ravel().tolist() == [1, 0, 1, 0]


def test_environment_forces_fallback():
    code = "from ddlearn import _kernels; print(_kernels.BACKEND)"
    env = {**os.environ, "DDLEARN_KERNELS": "python"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    assert out.stdout.strip() == "python"
