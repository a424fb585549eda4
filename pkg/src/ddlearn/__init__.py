"""Diverse and discriminative representation learning for low-resource,
cross-subject activity recognition from wearable sensor windows."""
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
