"""Synthetic multi-subject sensor recordings with subject-level shift.

Each activity class is a fixed bank of sinusoids plus a per-channel offset
(a stand-in for gravity/posture). Each subject then applies its own amplitude
scale, movement tempo, per-channel bias and a rigid 3-D rotation of every
channel triad, plus i.i.d. observation noise. Labels mean the same thing for every subject; only
the sensor response moves.
"""
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import ConfigError
from .windows import RawRecording


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 4
    n_classes: int = 6
    channels: int = 9
    length: int = 4000
    recordings_per_class: int = 1
    components: int = 3
    freq_min: float = 0.01  # cycles per sample
    freq_max: float = 0.12
    offset_sigma: float = 0.6
    # subject-level shift magnitudes
    scale_sigma: float = 0.25
    bias_sigma: float = 0.3
    rotation_deg: float = 60.0
    tempo_sigma: float = 0.0  # log-normal spread of each subject's movement speed
    noise_sigma: float = 0.15

    def validate(self):
        if self.channels < 3 or self.channels % 3:
            raise ConfigError(f"synthetic channels must be a positive multiple of 3, got {self.channels}")
        if self.n_subjects < 2 or self.n_classes < 2:
            raise ConfigError("need at least 2 subjects and 2 classes")
        if self.length < 1 or self.recordings_per_class < 1 or self.components < 1:
            raise ConfigError("length, recordings_per_class and components must be >= 1")
        if not 0 < self.freq_min <= self.freq_max <= 0.5:
            raise ConfigError("need 0 < freq_min <= freq_max <= 0.5 cycles/sample")
        for name in ("offset_sigma", "scale_sigma", "bias_sigma", "rotation_deg", "tempo_sigma",
                     "noise_sigma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        return self

    def without_shift(self):
        return SynthConfig(**{**asdict(self), "scale_sigma": 0.0, "bias_sigma": 0.0,
                              "rotation_deg": 0.0, "tempo_sigma": 0.0,
                              "noise_sigma": 0.0})


def _class_templates(cfg, rng):
    shape = (cfg.n_classes, cfg.channels, cfg.components)
    return dict(
        freq=rng.uniform(cfg.freq_min, cfg.freq_max, shape),
        amp=rng.uniform(0.3, 1.0, shape),
        phase=rng.uniform(0.0, 2 * np.pi, shape),
        offset=rng.normal(0.0, cfg.offset_sigma, (cfg.n_classes, cfg.channels)),
    )


def _subject_shift(cfg, rng):
    groups = cfg.channels // 3
    rots = []
    for _ in range(groups):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        angle = np.deg2rad(rng.uniform(0.0, cfg.rotation_deg))
        rots.append(Rotation.from_rotvec(axis * angle).as_matrix())
    return dict(
        scale=float(np.exp(rng.normal(0.0, cfg.scale_sigma))),
        bias=rng.normal(0.0, cfg.bias_sigma, cfg.channels),
        rotations=rots,
        tempo=float(np.exp(rng.normal(0.0, cfg.tempo_sigma))),
    )


def _waveform(tpl, label, t):
    # (channels, components, L) -> (channels, L)
    arg = 2 * np.pi * tpl["freq"][label][:, :, None] * t[None, None, :] + tpl["phase"][label][:, :, None]
    return (tpl["amp"][label][:, :, None] * np.sin(arg)).sum(axis=1) + tpl["offset"][label][:, None]


def synth_generate(config, seed):
    """Return ``n_subjects * n_classes * recordings_per_class`` recordings."""
    cfg = config.validate()
    root = np.random.SeedSequence([int(seed), 7117])
    tpl_seq, *subject_seqs = root.spawn(1 + cfg.n_subjects)
    tpl = _class_templates(cfg, np.random.default_rng(tpl_seq))
    t = np.arange(cfg.length, dtype=np.float64)
    recordings = []
    for sid, seq in enumerate(subject_seqs):
        shift_seq, noise_seq = seq.spawn(2)
        shift = _subject_shift(cfg, np.random.default_rng(shift_seq))
        noise_rng = np.random.default_rng(noise_seq)
        for label in range(cfg.n_classes):
            for r in range(cfg.recordings_per_class):
                # recording start time depends on (class, repeat) only, never on the subject
                start = np.random.default_rng([int(seed), label, r]).integers(0, 10 * cfg.length) if r else 0
                x = _waveform(tpl, label, shift["tempo"] * (t + start))
                for g, rot in enumerate(shift["rotations"]):
                    x[3 * g:3 * g + 3] = rot @ x[3 * g:3 * g + 3]
                x = shift["scale"] * x + shift["bias"][:, None]
                if cfg.noise_sigma > 0:
                    x = x + noise_rng.normal(0.0, cfg.noise_sigma, x.shape)
                recordings.append(RawRecording(sid, label, x))
    return recordings
