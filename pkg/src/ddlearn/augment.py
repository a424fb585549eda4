"""Sensor-window transformations and augmentation-type labelling.

Every transform maps a ``(c, 1, w)`` window to a new array of the same shape
and draws all of its randomness from the ``numpy.random.Generator`` it is
given. The integer codes of :class:`AugmentationKind` are the labels of the
self-supervised augmentation classifier.
"""
import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial.transform import Rotation

from .data.windows import WindowSet
from .errors import ConfigError, InputError, StateError

log = logging.getLogger(__name__)


class AugmentationKind(IntEnum):
    ORIGINAL = 0
    ROTATION = 1
    PERMUTATION = 2
    TIME_WARP = 3
    SCALE = 4
    MAGNITUDE_WARP = 5
    JITTER = 6
    RANDOM_SAMPLE = 7


N_AUG_CLASSES = len(AugmentationKind)
TRANSFORM_KINDS = tuple(k for k in AugmentationKind if k != AugmentationKind.ORIGINAL)


@dataclass(frozen=True)
class AugmentParams:
    perm_segments: int = 4
    timewarp_knots: int = 4
    timewarp_sigma: float = 0.2
    scale_sigma: float = 0.1
    magwarp_knots: int = 4
    magwarp_sigma: float = 0.2
    jitter_sigma: float = 0.05
    randsample_points: int = None  # None -> w // 2
    rotation_per_triad: bool = False

    def validate(self, width=None):
        for name in ("timewarp_sigma", "scale_sigma", "magwarp_sigma", "jitter_sigma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"augment.{name} must be >= 0")
        for name in ("perm_segments", "timewarp_knots", "magwarp_knots"):
            if getattr(self, name) < 1:
                raise ConfigError(f"augment.{name} must be >= 1")
        if width is not None:
            if self.perm_segments > width:
                raise ConfigError(f"augment.perm_segments ({self.perm_segments}) exceeds window {width}")
            points = self.sample_points(width)
            if not 2 <= points <= width:
                raise ConfigError(f"augment.randsample_points must be in [2, {width}], got {points}")
        return self

    def sample_points(self, width):
        return max(2, width // 2) if self.randsample_points is None else self.randsample_points


DEFAULT_PARAMS = AugmentParams()


def _check_window(window):
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 3 or window.shape[1] != 1:
        raise InputError(f"expected a (c, 1, w) window, got shape {window.shape}")
    return window


# -- rotation ----------------------------------------------------------------------

def random_rotation(rng):
    """Rotation matrix about a uniformly random axis by an angle uniform on [0, 2π)."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, 2 * np.pi)
    return Rotation.from_rotvec(axis * angle).as_matrix()


def apply_rotation(window, matrices):
    """Rotate every channel triad by its matrix (one matrix is shared by all triads)."""
    window = _check_window(window)
    c = window.shape[0]
    if c % 3:
        raise InputError(f"rotation needs channels in triads, got {c} channels; "
                         "disable rotation for this dataset")
    if np.ndim(matrices) == 2:
        matrices = [matrices] * (c // 3)
    out = np.empty_like(window)
    for g, rot in enumerate(matrices):
        out[3 * g:3 * g + 3, 0, :] = rot @ window[3 * g:3 * g + 3, 0, :]
    return out


def rotate(window, params=DEFAULT_PARAMS, rng=None):
    window = _check_window(window)
    if window.shape[0] % 3:
        raise InputError(f"rotation needs channels in triads, got {window.shape[0]} channels; "
                         "disable rotation for this dataset")
    if params.rotation_per_triad:
        matrices = [random_rotation(rng) for _ in range(window.shape[0] // 3)]
    else:
        matrices = random_rotation(rng)
    return apply_rotation(window, matrices)


# -- permutation ---------------------------------------------------------------------

def segment_bounds(width, n_segments):
    """Near-equal contiguous segments; the remainder goes to the leading ones."""
    return np.array_split(np.arange(width), n_segments)


def permute_segments(window, n_segments, order):
    window = _check_window(window)
    segments = segment_bounds(window.shape[2], n_segments)
    index = np.concatenate([segments[i] for i in order])
    return window[:, :, index]


def permute(window, params=DEFAULT_PARAMS, rng=None):
    window = _check_window(window)
    if params.perm_segments > window.shape[2]:
        raise InputError("perm_segments exceeds the window length")
    order = rng.permutation(params.perm_segments)
    return permute_segments(window, params.perm_segments, order)


# -- smooth curves ------------------------------------------------------------------------

def smooth_curve(knot_values, width):
    """Cubic spline through values at evenly spaced anchors spanning [0, w-1]."""
    knot_values = np.asarray(knot_values, dtype=np.float64)
    anchors = np.linspace(0.0, width - 1, knot_values.shape[-1])
    return CubicSpline(anchors, knot_values, axis=-1)(np.arange(width, dtype=np.float64))


def warp_positions(knot_values, width, floor=0.1):
    """Monotone time map with 0 -> 0 and w-1 -> w-1 from a smooth speed curve."""
    knot_values = np.maximum(np.asarray(knot_values, dtype=np.float64), floor)
    speed = np.maximum(smooth_curve(knot_values, width), floor)
    steps = 0.5 * (speed[1:] + speed[:-1])
    cum = np.concatenate([[0.0], np.cumsum(steps)])
    cum *= (width - 1) / cum[-1]
    cum[-1] = width - 1
    if np.any(np.diff(cum) <= 0):
        raise StateError("time-warp map is not strictly increasing")
    return cum


def resample(window, positions):
    """Linearly interpolate every channel at fractional time ``positions``."""
    window = _check_window(window)
    grid = np.arange(window.shape[2], dtype=np.float64)
    out = np.empty((window.shape[0], 1, len(positions)))
    for ch in range(window.shape[0]):
        out[ch, 0] = np.interp(positions, grid, window[ch, 0])
    return out


def time_warp(window, params=DEFAULT_PARAMS, rng=None):
    window = _check_window(window)
    w = window.shape[2]
    if w < 4:
        raise InputError("time warp needs a window of at least 4 samples")
    knots = rng.normal(1.0, params.timewarp_sigma, params.timewarp_knots + 2)
    return resample(window, warp_positions(knots, w))


def magnitude_curves(knot_values, width):
    """Per-channel smooth gain curves; ``knot_values`` is ``(c, n_knots)``."""
    return smooth_curve(knot_values, width)


def magnitude_warp(window, params=DEFAULT_PARAMS, rng=None):
    window = _check_window(window)
    c, _, w = window.shape
    if w < 4:
        raise InputError("magnitude warp needs a window of at least 4 samples")
    knots = rng.normal(1.0, params.magwarp_sigma, (c, params.magwarp_knots + 2))
    return window * magnitude_curves(knots, w)[:, None, :]


# -- pointwise -----------------------------------------------------------------------------

def scale(window, params=DEFAULT_PARAMS, rng=None):
    window = _check_window(window)
    return window * rng.normal(1.0, params.scale_sigma)


def jitter(window, params=DEFAULT_PARAMS, rng=None):
    window = _check_window(window)
    return window + rng.normal(0.0, params.jitter_sigma, window.shape)


def sample_timestamps(width, n_points, rng):
    """Sorted random timestamps that always include 0 and w-1."""
    if not 2 <= n_points <= width:
        raise InputError(f"random sample needs 2 <= points <= {width}, got {n_points}")
    inner = rng.choice(np.arange(1, width - 1), size=n_points - 2, replace=False)
    return np.concatenate([[0], np.sort(inner), [width - 1]])


def interpolate_from(window, timestamps):
    window = _check_window(window)
    grid = np.arange(window.shape[2], dtype=np.float64)
    ts = np.asarray(timestamps)
    out = np.empty_like(window)
    for ch in range(window.shape[0]):
        out[ch, 0] = np.interp(grid, ts, window[ch, 0, ts])
    return out


def random_sample(window, params=DEFAULT_PARAMS, rng=None):
    window = _check_window(window)
    w = window.shape[2]
    return interpolate_from(window, sample_timestamps(w, params.sample_points(w), rng))


TRANSFORMS = {
    AugmentationKind.ROTATION: rotate,
    AugmentationKind.PERMUTATION: permute,
    AugmentationKind.TIME_WARP: time_warp,
    AugmentationKind.SCALE: scale,
    AugmentationKind.MAGNITUDE_WARP: magnitude_warp,
    AugmentationKind.JITTER: jitter,
    AugmentationKind.RANDOM_SAMPLE: random_sample,
}


def apply_transform(kind, window, params=DEFAULT_PARAMS, rng=None):
    return TRANSFORMS[AugmentationKind(kind)](window, params, rng)


# -- batches -----------------------------------------------------------------------------------

def _seed_key(seed):
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def allowed_kinds(channels):
    if channels % 3:
        return tuple(k for k in TRANSFORM_KINDS if k != AugmentationKind.ROTATION)
    return TRANSFORM_KINDS


_warned_rotation = set()


def augment_batch(originals, seed, params=DEFAULT_PARAMS, mode="one"):
    """Augmented counterparts for a batch of original windows.

    ``mode="one"``: each window gets one transform drawn uniformly from the
    seven (rotation is excluded when channels are not triads), so the output
    has the input's size. ``mode="all"``: every window gets all available
    transforms, in code order. Window ``i`` draws from its own stream keyed by
    ``(seed, i)``, so results do not depend on batch order or parallelism.
    Accepts and returns a ``WindowSet`` or a list of ``SensorWindow``.
    """
    as_set = isinstance(originals, WindowSet)
    ws = originals if as_set else WindowSet.from_windows(originals)
    if len(ws) == 0:
        raise InputError("augment_batch needs at least one window")
    if mode not in ("one", "all"):
        raise ConfigError(f"augmentation mode must be 'one' or 'all', got {mode!r}")
    kinds = allowed_kinds(ws.channels)
    if len(kinds) < len(TRANSFORM_KINDS) and ws.channels not in _warned_rotation:
        _warned_rotation.add(ws.channels)
        log.warning("%d channels are not triads; rotation is excluded from augmentation",
                    ws.channels)
    key = _seed_key(seed)
    xs, codes, index = [], [], []
    for i in range(len(ws)):
        rng = np.random.default_rng(key + [i])
        chosen = (kinds[int(rng.integers(len(kinds)))],) if mode == "one" else kinds
        for kind in chosen:
            xs.append(apply_transform(kind, ws.x[i], params, rng))
            codes.append(int(kind))
            index.append(i)
    index = np.asarray(index)
    out = WindowSet(np.stack(xs), ws.y[index], ws.subject[index], codes)
    return out if as_set else out.to_windows()
