"""Sensor data ingestion, windowing, scaling and task construction."""
from .io import DatasetSchema, load_dataset, write_dataset_csv
from .presets import PRESETS, DatasetPreset
from .splits import (LOW_RESOURCE_FRACTIONS, SplitSpec, TaskData, build_task_data, group_subjects,
                     make_tasks, split_counts, split_subject, subsample_low_resource)
from .synth import SynthConfig, synth_generate
from .windows import (MinMaxScaler, RawRecording, SensorWindow, WindowSet, apply_minmax,
                      fit_minmax, invert_minmax, segment_all, segment_windows, window_starts)

__all__ = [
    "DatasetPreset", "DatasetSchema", "LOW_RESOURCE_FRACTIONS", "MinMaxScaler", "PRESETS",
    "RawRecording", "SensorWindow", "SplitSpec", "SynthConfig", "TaskData", "WindowSet",
    "apply_minmax", "build_task_data", "fit_minmax", "group_subjects", "invert_minmax",
    "load_dataset", "make_tasks", "segment_all", "segment_windows", "split_counts",
    "split_subject", "subsample_low_resource", "synth_generate", "window_starts",
    "write_dataset_csv",
]
