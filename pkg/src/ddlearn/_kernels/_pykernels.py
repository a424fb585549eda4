"""Pure numpy versions of the hot conv/pool kernels.

All arrays are float64 and laid out as (batch, channels, width); the height
axis of the 4-D layer tensors is squeezed away by the caller.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

BACKEND = "python"


def conv1d_forward(x, weight, bias):
    # cols[b, c, t, j] = x[b, c, t + j]
    cols = sliding_window_view(x, weight.shape[2], axis=2)
    out = np.tensordot(cols, weight, axes=([1, 3], [1, 2]))  # (b, t, o)
    out = out.transpose(0, 2, 1) + bias[None, :, None]
    return np.ascontiguousarray(out)


def conv1d_backward(x, weight, grad_out):
    k = weight.shape[2]
    t_out = grad_out.shape[2]
    cols = sliding_window_view(x, k, axis=2)
    grad_w = np.tensordot(grad_out, cols, axes=([0, 2], [0, 2]))  # (o, c, k)
    grad_b = grad_out.sum(axis=(0, 2))
    grad_cols = np.tensordot(grad_out, weight, axes=([1], [0]))  # (b, t, c, k)
    grad_x = np.zeros_like(x)
    for j in range(k):
        grad_x[:, :, j:j + t_out] += grad_cols[:, :, :, j].transpose(0, 2, 1)
    return grad_x, grad_w, grad_b


def maxpool1d_forward(x):
    b, c, w = x.shape
    half = w // 2
    pairs = x[:, :, :2 * half].reshape(b, c, half, 2)
    # ties resolve to the left element
    pick = (pairs[..., 1] > pairs[..., 0]).astype(np.int64)
    out = np.where(pick == 1, pairs[..., 1], pairs[..., 0])
    index = 2 * np.arange(half, dtype=np.int64)[None, None, :] + pick
    return np.ascontiguousarray(out), index


def maxpool1d_backward(grad_out, index, width):
    b, c, _ = grad_out.shape
    grad_x = np.zeros((b, c, width))
    np.put_along_axis(grad_x, index, grad_out, axis=2)
    return grad_x
