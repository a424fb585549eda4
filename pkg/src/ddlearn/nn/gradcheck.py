"""Central finite differences, used as the independent gradient oracle."""
import numpy as np

from ..errors import ConfigError
from .tensor import Tensor


def finite_diff_grad(loss_fn, params, h=1e-5):
    """Return ``[(f(θ+h) - f(θ-h)) / 2h]`` per coordinate of every parameter.

    ``loss_fn`` takes no arguments and must be deterministic. It may return a
    scalar or a 1-D array of several losses; in the latter case each gradient
    gets a trailing axis with one column per loss. Parameters are perturbed in
    place and restored.
    """
    if h <= 0:
        raise ConfigError("finite-difference step must be > 0")
    grads = []
    for p in params:
        data = p.data
        flat = data.reshape(-1)
        rows = []
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = _value(loss_fn())
            flat[i] = orig - h
            down = _value(loss_fn())
            flat[i] = orig
            rows.append((up - down) / (2.0 * h))
        rows = np.asarray(rows, dtype=np.float64)
        grads.append(rows.reshape(data.shape + rows.shape[1:]))
    return grads


def _value(out):
    out = out.data if isinstance(out, Tensor) else out
    return np.asarray(out, dtype=np.float64).reshape(-1) if np.ndim(out) else float(out)


def max_relative_error(analytic, numeric, floor=1e-6):
    """Largest ``|a - n| / max(|a|, |n|, floor)`` across all coordinates."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        a = np.asarray(a)
        n = np.asarray(n)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
