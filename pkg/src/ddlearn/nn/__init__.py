"""Numeric core: autodiff tensors, layers, Adam and a finite-difference oracle."""
from .checkpoint import load_checkpoint, save_checkpoint
from .functional import (conv2d, flatten, l2_normalize, linear, log_softmax, masked_logsumexp,
                         maxpool2d, relu, softmax)
from .gradcheck import finite_diff_grad, max_relative_error
from .optim import Adam, AdamState, adam_step
from .tensor import Parameter, Tensor, concat, no_grad, tensor

__all__ = [
    "Adam", "AdamState", "Parameter", "Tensor", "adam_step", "concat", "conv2d",
    "finite_diff_grad", "flatten", "l2_normalize", "linear", "load_checkpoint",
    "log_softmax", "masked_logsumexp", "max_relative_error", "maxpool2d", "no_grad", "relu",
    "save_checkpoint", "softmax", "tensor",
]
