"""Leave-one-group-out tasks, 6:2:2 splits and low-resource subsampling."""
import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .windows import WindowSet, apply_minmax, fit_minmax

log = logging.getLogger(__name__)

SPLIT_RATIOS = (0.6, 0.2, 0.2)
LOW_RESOURCE_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)


@dataclass(frozen=True)
class SplitSpec:
    groups: tuple  # tuple of tuples of subject ids
    target_group_index: int
    low_resource_fraction: float = 1.0
    ratios: tuple = SPLIT_RATIOS

    @property
    def target_subjects(self):
        return self.groups[self.target_group_index]

    @property
    def source_subjects(self):
        return tuple(s for i, g in enumerate(self.groups) if i != self.target_group_index
                     for s in g)


def group_subjects(subjects, group_count):
    """Chunk sorted subject ids into ``group_count`` contiguous groups, larger groups first.

    8 subjects / 4 groups -> sizes (2, 2, 2, 2); 14 / 5 -> (3, 3, 3, 3, 2).
    """
    subjects = sorted(set(int(s) for s in subjects))
    if group_count < 1 or group_count > len(subjects):
        raise ConfigError(f"group_count must be in [1, {len(subjects)}], got {group_count}")
    if group_count == 1:
        raise ConfigError("leave-one-group-out needs at least 2 groups")
    return tuple(tuple(int(s) for s in chunk)
                 for chunk in np.array_split(np.asarray(subjects), group_count))


def make_tasks(subjects, group_count, fraction=1.0, groups=None):
    """One SplitSpec per held-out group.

    ``groups`` may be given explicitly (a partition of ``subjects``); otherwise
    subjects are grouped by id order.
    """
    if groups is None:
        groups = group_subjects(subjects, group_count)
    else:
        groups = tuple(tuple(int(s) for s in g) for g in groups)
        flat = [s for g in groups for s in g]
        if len(flat) != len(set(flat)) or set(flat) != set(int(s) for s in subjects):
            raise ConfigError("explicit groups must be disjoint and cover every subject")
        if len(groups) < 2 or any(len(g) == 0 for g in groups):
            raise ConfigError("need at least 2 nonempty groups")
    _check_fraction(fraction)
    return [SplitSpec(groups, i, float(fraction)) for i in range(len(groups))]


def _check_fraction(fraction):
    if not 0 < fraction <= 1:
        raise ConfigError(f"low_resource_fraction must be in (0, 1], got {fraction}")


def split_counts(n, ratios=SPLIT_RATIOS):
    n_train = int(np.floor(n * ratios[0] + 0.5))
    n_val = int(np.floor(n * ratios[1] + 0.5))
    n_val = min(n_val, n - n_train)
    return n_train, n_val, n - n_train - n_val


def split_subject(windows, seed, subject_id, ratios=SPLIT_RATIOS):
    """Shuffle one subject's windows with a seeded stream and cut train/val/test."""
    rng = np.random.default_rng([int(seed), int(subject_id), 622])
    order = rng.permutation(len(windows))
    n_train, n_val, _ = split_counts(len(windows), ratios)
    return (windows.subset(np.sort(order[:n_train])),
            windows.subset(np.sort(order[n_train:n_train + n_val])),
            windows.subset(np.sort(order[n_train + n_val:])))


def subsample_low_resource(train_windows, fraction, seed):
    """Uniform sample without replacement of ``round(fraction * n)`` windows; order kept."""
    _check_fraction(fraction)
    n = len(train_windows)
    k = int(np.floor(fraction * n + 0.5))
    if k == 0:
        raise ConfigError(f"fraction {fraction} of {n} training windows leaves nothing to train on")
    if k == n:
        return train_windows
    rng = np.random.default_rng([int(seed), 2022])
    index = np.sort(rng.choice(n, size=k, replace=False))
    if isinstance(train_windows, WindowSet):
        out = train_windows.subset(index)
        missing = set(np.unique(train_windows.y)) - set(np.unique(out.y))
    else:
        out = [train_windows[i] for i in index]
        missing = ({w.activity_label for w in train_windows}
                   - {w.activity_label for w in out})
    if missing:
        log.warning("low-resource subsample (fraction %s) dropped every window of classes %s",
                    fraction, sorted(int(m) for m in missing))
    return out


@dataclass
class TaskData:
    """Normalised data for one (task, seed, fraction) run.

    Only ``train`` and ``val`` are handed to the trainer; ``target`` is the
    held-out group's test split.
    """

    split: SplitSpec
    train: WindowSet
    val: WindowSet
    target: WindowSet
    scaler: object


def build_task_data(windows, split, seed):
    """Split every subject 6:2:2, pool source train/val, subsample, and scale.

    The scaler is fit on the (subsampled) source training windows only.
    """
    parts = {}
    for sid in sorted(set(int(s) for g in split.groups for s in g)):
        mask = windows.subject == sid
        if not mask.any():
            raise ConfigError(f"subject {sid} has no windows")
        parts[sid] = split_subject(windows.subset(np.flatnonzero(mask)), seed, sid, split.ratios)

    train = WindowSet.concat([parts[s][0] for s in split.source_subjects])
    val = WindowSet.concat([parts[s][1] for s in split.source_subjects])
    target = WindowSet.concat([parts[s][2] for s in split.target_subjects])
    train = subsample_low_resource(train, split.low_resource_fraction, seed)
    scaler = fit_minmax(train)
    return TaskData(split, apply_minmax(train, scaler), apply_minmax(val, scaler),
                    apply_minmax(target, scaler), scaler)
