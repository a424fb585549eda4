"""Differentiable layer operations.

Layer tensors follow the ``(b, c, h, w)`` convention with ``h == 1``. Conv is a
valid cross-correlation with stride 1 and no padding; max-pooling uses a
``(1, 2)`` window with stride 2 and drops a trailing odd column.
"""
import numpy as np

from .. import _kernels
from ..errors import DimensionError
from .tensor import Tensor, _wrap


def _check_rank(x, rank, what):
    if x.ndim != rank:
        raise DimensionError(f"{what}: expected a {rank}-D tensor, got shape {x.shape}")


def conv2d(x, weight, bias):
    """``(b, c, 1, w) * (co, c, 1, k) + (co,) -> (b, co, 1, w - k + 1)``."""
    x, weight, bias = _wrap(x), _wrap(weight), _wrap(bias)
    _check_rank(x, 4, "conv2d input")
    _check_rank(weight, 4, "conv2d kernel")
    b, c, h, w = x.shape
    co, ci, kh, k = weight.shape
    if h != 1 or kh != 1:
        raise DimensionError(f"conv2d: height axis must be 1 (input {h}, kernel {kh})")
    if ci != c:
        raise DimensionError(f"conv2d: channel axis mismatch, input {c} vs kernel {ci}")
    if bias.shape != (co,):
        raise DimensionError(f"conv2d: bias axis 0 must be {co}, got shape {bias.shape}")
    if k > w:
        raise DimensionError(f"conv2d: width axis {w} shorter than kernel width {k}")

    x3 = np.ascontiguousarray(x.data.reshape(b, c, w))
    w3 = np.ascontiguousarray(weight.data.reshape(co, c, k))
    out = _kernels.conv1d_forward(x3, w3, np.ascontiguousarray(bias.data))

    def back(g):
        gx, gw, gb = _kernels.conv1d_backward(
            x3, w3, np.ascontiguousarray(g.reshape(b, co, w - k + 1)))
        return gx.reshape(x.shape), gw.reshape(weight.shape), gb

    return Tensor._make(out.reshape(b, co, 1, w - k + 1), (x, weight, bias), back)


def relu(x):
    x = _wrap(x)
    mask = x.data > 0
    return Tensor._make(np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def maxpool2d(x):
    """Disjoint pairwise max along width; the argmax is kept for backward."""
    x = _wrap(x)
    _check_rank(x, 4, "maxpool2d input")
    b, c, h, w = x.shape
    if h != 1:
        raise DimensionError(f"maxpool2d: height axis must be 1, got {h}")
    if w < 2:
        raise DimensionError(f"maxpool2d: width axis must be >= 2, got {w}")
    out, index = _kernels.maxpool1d_forward(np.ascontiguousarray(x.data.reshape(b, c, w)))

    def back(g):
        gx = _kernels.maxpool1d_backward(
            np.ascontiguousarray(g.reshape(b, c, w // 2)), index, w)
        return (gx.reshape(x.shape),)

    return Tensor._make(out.reshape(b, c, 1, w // 2), (x,), back)


def linear(x, weight, bias):
    """Affine map ``x @ weight.T + bias`` with ``weight`` shaped ``(m, n)``."""
    x, weight, bias = _wrap(x), _wrap(weight), _wrap(bias)
    _check_rank(x, 2, "linear input")
    _check_rank(weight, 2, "linear weight")
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(
            f"linear: input axis 1 has {x.shape[1]} features, weight expects {weight.shape[1]}")
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"linear: bias axis 0 must be {weight.shape[0]}, got {bias.shape}")
    xd, wd = x.data, weight.data
    out = xd @ wd.T + bias.data
    return Tensor._make(out, (x, weight, bias),
                        lambda g: (g @ wd, g.T @ xd, g.sum(axis=0)))


def flatten(x):
    return _wrap(x).reshape(x.shape[0], -1)


def softmax(logits):
    """Row-wise softmax over the last axis, max-shifted."""
    logits = _wrap(logits)
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return Tensor._make(s, (logits,), back)


def log_softmax(logits):
    logits = _wrap(logits)
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    out = z - lse
    s = np.exp(out)
    return Tensor._make(out, (logits,),
                        lambda g: (g - s * g.sum(axis=-1, keepdims=True),))


def masked_logsumexp(x, mask):
    """Row-wise log-sum-exp of a 2-D tensor over entries where ``mask`` is True.

    Rows with an empty mask yield ``-inf``-free zeros and receive no gradient.
    """
    x = _wrap(x)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match {x.shape}")
    has_any = mask.any(axis=1)
    masked = np.where(mask, x.data, -np.inf)
    row_max = np.where(has_any, masked.max(axis=1), 0.0)
    e = np.where(mask, np.exp(x.data - row_max[:, None]), 0.0)
    total = e.sum(axis=1)
    safe = np.where(has_any, total, 1.0)
    out = np.where(has_any, row_max + np.log(safe), 0.0)
    weights = e / safe[:, None]
    return Tensor._make(out, (x,), lambda g: (weights * g[:, None],))


def l2_normalize(x, eps=1e-12):
    """Scale rows of a 2-D tensor to unit Euclidean norm (norms floored at ``eps``).

    An all-zero row stays zero and passes gradient through as ``g / eps``.
    """
    x = _wrap(x)
    _check_rank(x, 2, "l2_normalize input")
    norm = np.sqrt((x.data * x.data).sum(axis=1, keepdims=True))
    big = norm > eps
    denom = np.where(big, norm, eps)
    out = x.data / denom

    def back(g):
        radial = np.where(big, (g * out).sum(axis=1, keepdims=True), 0.0)
        return ((g - out * radial) / denom,)

    return Tensor._make(out, (x,), back)
