"""Per-dataset protocol constants."""
from dataclasses import dataclass


@dataclass(frozen=True)
class DatasetPreset:
    name: str
    window: int
    channels: int
    n_classes: int
    n_subjects: int
    groups: int
    overlap: float = 0.5
    architecture: str = "dsads"


PRESETS = {
    # 25 Hz x 5 s
    "dsads": DatasetPreset("dsads", 125, 45, 19, 8, 4, architecture="dsads"),
    # 100 Hz x 5.12 s
    "pamap2": DatasetPreset("pamap2", 512, 27, 8, 8, 4, architecture="pamap2"),
    # 100 Hz x 5 s
    "uschad": DatasetPreset("uschad", 500, 6, 12, 14, 5, architecture="uschad"),
}
