"""Recordings, fixed-length windows and per-channel min-max scaling."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DimensionError, InputError


@dataclass
class RawRecording:
    """One contiguous (subject, activity) stretch of raw sensor samples, shaped ``(c, L)``."""

    subject_id: int
    activity_label: int
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[1] < 1:
            raise InputError(f"recording samples must be (channels, L>=1), got {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise InputError("recording samples must be finite")

    @property
    def channels(self):
        return self.samples.shape[0]

    @property
    def length(self):
        return self.samples.shape[1]


@dataclass
class SensorWindow:
    data: np.ndarray  # (c, 1, w)
    activity_label: int
    subject_id: int
    aug_kind: int = 0


@dataclass
class WindowSet:
    """Stacked windows: ``x`` is ``(n, c, 1, w)``; labels are parallel int arrays."""

    x: np.ndarray
    y: np.ndarray
    subject: np.ndarray
    aug_kind: np.ndarray = field(default=None)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        n = len(self.x)
        self.y = np.asarray(self.y, dtype=np.int64).reshape(n)
        self.subject = np.asarray(self.subject, dtype=np.int64).reshape(n)
        if self.aug_kind is None:
            self.aug_kind = np.zeros(n, dtype=np.int64)
        self.aug_kind = np.asarray(self.aug_kind, dtype=np.int64).reshape(n)

    def __len__(self):
        return len(self.x)

    @property
    def channels(self):
        return self.x.shape[1]

    @property
    def width(self):
        return self.x.shape[3]

    def subset(self, index):
        index = np.asarray(index, dtype=np.int64)
        return WindowSet(self.x[index], self.y[index], self.subject[index], self.aug_kind[index])

    def to_windows(self):
        return [SensorWindow(self.x[i], int(self.y[i]), int(self.subject[i]), int(self.aug_kind[i]))
                for i in range(len(self))]

    @classmethod
    def from_windows(cls, windows):
        windows = list(windows)
        if not windows:
            raise InputError("cannot stack an empty window list")
        return cls(np.stack([w.data for w in windows]),
                   [w.activity_label for w in windows],
                   [w.subject_id for w in windows],
                   [w.aug_kind for w in windows])

    @classmethod
    def concat(cls, sets):
        sets = [s for s in sets if len(s)]
        if not sets:
            raise InputError("cannot concatenate only empty window sets")
        return cls(np.concatenate([s.x for s in sets]), np.concatenate([s.y for s in sets]),
                   np.concatenate([s.subject for s in sets]),
                   np.concatenate([s.aug_kind for s in sets]))


def _as_set(windows):
    return windows if isinstance(windows, WindowSet) else WindowSet.from_windows(windows)


def window_step(window_len, overlap):
    if not 0 <= overlap < 1:
        raise ConfigError(f"overlap must be in [0, 1), got {overlap}")
    step = int(np.floor(window_len * (1.0 - overlap)))
    if step < 1:
        raise ConfigError(f"window_len={window_len} with overlap={overlap} gives a zero step")
    return step


def window_starts(length, window_len, overlap):
    step = window_step(window_len, overlap)
    if window_len > length:
        return np.zeros(0, dtype=np.int64)
    return np.arange(0, length - window_len + 1, step, dtype=np.int64)


def segment_windows(rec, window_len, overlap=0.5):
    """Cut ``rec`` into windows of ``window_len`` samples starting every
    ``floor(window_len * (1 - overlap))`` samples. A recording shorter than
    one window yields no windows (with a warning).
    """
    if window_len < 1:
        raise ConfigError("window_len must be >= 1")
    starts = window_starts(rec.length, window_len, overlap)
    if len(starts) == 0:
        warnings.warn(f"recording of subject {rec.subject_id} / activity {rec.activity_label} "
                      f"has {rec.length} samples < window length {window_len}; skipped",
                      stacklevel=2)
        return []
    return [SensorWindow(rec.samples[:, s:s + window_len][:, None, :].copy(),
                         rec.activity_label, rec.subject_id) for s in starts]


def segment_all(recordings, window_len, overlap=0.5):
    """Segment every recording and stack the results in recording order."""
    windows = []
    for rec in recordings:
        windows.extend(segment_windows(rec, window_len, overlap))
    return WindowSet.from_windows(windows)


@dataclass
class MinMaxScaler:
    mins: np.ndarray
    maxs: np.ndarray

    @property
    def degenerate(self):
        return self.maxs == self.mins

    @property
    def channels(self):
        return len(self.mins)


def fit_minmax(train_windows):
    """Per-channel min and max over all training windows."""
    ws = _as_set(train_windows)
    if len(ws) == 0:
        raise InputError("cannot fit a scaler on an empty training set")
    mins = ws.x.min(axis=(0, 2, 3))
    maxs = ws.x.max(axis=(0, 2, 3))
    return MinMaxScaler(mins, maxs)


def apply_minmax(windows, scaler):
    """Map each channel to ``[0, 1]`` by ``(x - min) / (max - min)``, clamped.
    Degenerate channels map to 0. Returns the same container type as given.
    """
    ws = _as_set(windows)
    if ws.channels != scaler.channels:
        raise DimensionError(f"channel axis: windows have {ws.channels}, scaler has {scaler.channels}")
    span = scaler.maxs - scaler.mins
    safe = np.where(span > 0, span, 1.0)
    x = (ws.x - scaler.mins[None, :, None, None]) / safe[None, :, None, None]
    x = np.clip(x, 0.0, 1.0)
    x[:, span <= 0] = 0.0
    out = WindowSet(x, ws.y, ws.subject, ws.aug_kind)
    return out if isinstance(windows, WindowSet) else out.to_windows()


def invert_minmax(windows, scaler):
    ws = _as_set(windows)
    span = scaler.maxs - scaler.mins
    x = ws.x * span[None, :, None, None] + scaler.mins[None, :, None, None]
    out = WindowSet(x, ws.y, ws.subject, ws.aug_kind)
    return out if isinstance(windows, WindowSet) else out.to_windows()
