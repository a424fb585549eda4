"""Hot conv/pool kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``DDLEARN_KERNELS=python`` to force the fallback.
"""
import os

from . import _pykernels

pykernels = _pykernels

try:
    from . import _ckernels as ckernels
except ImportError:  # extension not built
    ckernels = None

if ckernels is not None and os.environ.get("DDLEARN_KERNELS", "").lower() != "python":
    active = ckernels
else:
    active = _pykernels

BACKEND = active.BACKEND


def available_backends():
    return {m.BACKEND: m for m in (_pykernels, ckernels) if m is not None}


def conv1d_forward(x, weight, bias):
    return active.conv1d_forward(x, weight, bias)


def conv1d_backward(x, weight, grad_out):
    return active.conv1d_backward(x, weight, grad_out)


def maxpool1d_forward(x):
    return active.maxpool1d_forward(x)


def maxpool1d_backward(grad_out, index, width):
    return active.maxpool1d_backward(grad_out, index, width)
