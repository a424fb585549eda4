"""Experiment configuration: INI files plus ``section.key=value`` overrides.

Every key is declared in ``SCHEMA`` with a parser and an accepted range, so
unknown keys, malformed values and out-of-range settings are rejected before
any data is touched.
"""
import configparser
import os
from dataclasses import dataclass, field, replace

from .augment import AugmentParams
from .data import PRESETS, SynthConfig
from .errors import ConfigError
from .losses import DistanceMetric, LossWeights
from .model import ARCH_PRESETS, ArchitectureSpec
from .trainer import VARIANTS, TrainConfig

OUTPUT_ROOT_ENV = "DDLEARN_OUTPUT_ROOT"
DATASETS = ("dsads", "pamap2", "uschad", "synthetic", "csv")


def _int_list(text):
    return tuple(int(v) for v in _split(text))


def _float_list(text):
    return tuple(float(v) for v in _split(text))


def _split(text):
    parts = [p.strip() for p in str(text).replace(";", ",").split(",")]
    return [p for p in parts if p]


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _layers(text):
    # "16x9, 32x9" -> ((16, 9), (32, 9))
    out = []
    for item in _split(text):
        co, k = item.lower().split("x")
        out.append((int(co), int(k)))
    return tuple(out)


def _opt_int(text):
    return None if str(text).strip().lower() in ("", "none", "auto") else int(text)


def _choice(*options):
    def parse(text):
        v = str(text).strip().lower()
        if v not in options:
            raise ValueError(f"{text!r}")
        return v
    parse.accepted = "one of " + ", ".join(options)
    return parse


def _range(lo=None, hi=None, lo_open=False, hi_open=False):
    def check(v):
        if lo is not None and (v < lo or (lo_open and v == lo)):
            return False
        if hi is not None and (v > hi or (hi_open and v == hi)):
            return False
        return True
    left = "(" if lo_open else "["
    right = ")" if hi_open else "]"
    check.accepted = f"{left}{'-inf' if lo is None else lo}, {'inf' if hi is None else hi}{right}"
    return check


def _each(check):
    def inner(vs):
        return len(vs) > 0 and all(check(v) for v in vs)
    inner.accepted = "nonempty list, each in " + check.accepted
    return inner


POS = _range(0, None, lo_open=True)
NONNEG = _range(0)
FRACTION = _range(0, 1, lo_open=True)

# section -> key -> (parser, range check or None)
SCHEMA = {
    "data": {
        "dataset": (_choice(*DATASETS), None),
        "path": (str, None),
        "window": (_opt_int, None),
        "overlap": (float, _range(0, 1, hi_open=True)),
        "channels": (_opt_int, None),
        "classes": (_opt_int, None),
        "groups": (_opt_int, None),
        "fractions": (_float_list, _each(FRACTION)),
    },
    "loss": {
        "lambda": (float, NONNEG),
        "beta": (float, NONNEG),
        "gamma": (float, NONNEG),
        "tau": (float, POS),
        "metric": (_choice(*(m.value for m in DistanceMetric)), None),
        "supcon_reduction": (_choice("sum", "mean"), None),
        "detach_dp": (_bool, None),
    },
    "train": {
        "variant": (_choice(*VARIANTS), None),
        "lr": (float, POS),
        "batch_size": (int, _range(1)),
        "epochs": (int, _range(1)),
        "seeds": (_int_list, _each(_range(0))),
        "workers": (int, _range(1)),
    },
    "augment": {
        "mode": (_choice("one", "all"), None),
        "perm_segments": (int, _range(1)),
        "timewarp_knots": (int, _range(1)),
        "timewarp_sigma": (float, NONNEG),
        "scale_sigma": (float, NONNEG),
        "magwarp_knots": (int, _range(1)),
        "magwarp_sigma": (float, NONNEG),
        "jitter_sigma": (float, NONNEG),
        "randsample_points": (_opt_int, None),
        "rotation_per_triad": (_bool, None),
    },
    "model": {
        "preset": (_choice(*ARCH_PRESETS), None),
        "conv_layers": (_layers, None),
        "fc_feature_dim": (_opt_int, _range(1)),
        "projection_dim": (int, _range(0)),
    },
    "synth": {
        "seed": (int, _range(0)),
        "subjects": (int, _range(2)),
        "length": (int, _range(1)),
        "recordings_per_class": (int, _range(1)),
        "components": (int, _range(1)),
        "freq_min": (float, _range(0, 0.5, lo_open=True)),
        "freq_max": (float, _range(0, 0.5, lo_open=True)),
        "offset_sigma": (float, NONNEG),
        "scale_sigma": (float, NONNEG),
        "bias_sigma": (float, NONNEG),
        "rotation_deg": (float, NONNEG),
        "tempo_sigma": (float, NONNEG),
        "noise_sigma": (float, NONNEG),
        "shift": (_bool, None),
    },
    "output": {
        "dir": (str, None),
        "checkpoints": (_bool, None),
        "embeddings": (_bool, None),
    },
}

# Defaults describe the desk-scale synthetic benchmark.
DEFAULTS = {
    "data": {"dataset": "synthetic", "path": "", "window": "auto", "overlap": "0.5",
             "channels": "auto", "classes": "auto", "groups": "auto", "fractions": "0.2"},
    "loss": {"lambda": "1.0", "beta": "1.0", "gamma": "0.1", "tau": "0.5",
             "metric": "discriminator", "supcon_reduction": "mean", "detach_dp": "false"},
    "train": {"variant": "ddlearn", "lr": "0.0008", "batch_size": "64", "epochs": "150",
              "seeds": "0, 1, 2", "workers": "1"},
    "augment": {"mode": "one", "perm_segments": "4", "timewarp_knots": "4",
                "timewarp_sigma": "0.2", "scale_sigma": "0.1", "magwarp_knots": "4",
                "magwarp_sigma": "0.2", "jitter_sigma": "0.05", "randsample_points": "auto",
                "rotation_per_triad": "false"},
    "model": {"preset": "dsads", "conv_layers": "", "fc_feature_dim": "", "projection_dim": "0"},
    "synth": {"seed": "0", "subjects": "4", "length": "4000", "recordings_per_class": "1",
              "components": "3", "freq_min": "0.01", "freq_max": "0.12", "offset_sigma": "0.6",
              "scale_sigma": "0.25", "bias_sigma": "0.3", "rotation_deg": "60",
              "tempo_sigma": "0.0", "noise_sigma": "0.15", "shift": "true"},
    "output": {"dir": "", "checkpoints": "false", "embeddings": "false"},
}

SYNTH_WINDOW = 64
SYNTH_CHANNELS = 9
SYNTH_CLASSES = 6
SYNTH_GROUPS = 2


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    data_path: str
    window: int
    overlap: float
    channels: int
    n_classes: int
    groups: int
    fractions: tuple
    train: TrainConfig
    variant: str
    seeds: tuple
    workers: int
    architecture: ArchitectureSpec
    synth: SynthConfig = None
    synth_seed: int = 0
    output_dir: str = ""
    save_checkpoints: bool = False
    export_embeddings: bool = False
    raw: dict = field(default_factory=dict, compare=False)  # resolved section -> key -> text

    def to_ini(self):
        cp = configparser.ConfigParser(interpolation=None)
        for section in SCHEMA:
            cp[section] = self.raw[section]
        return cp

    def write(self, path):
        with open(path, "w") as fh:
            self.to_ini().write(fh)
        return path

    def trainer_config(self, seed):
        return replace(self.train, seed=int(seed))


def _parse_value(section, key, text):
    parser, check = SCHEMA[section][key]
    try:
        value = parser(text)
    except (ValueError, TypeError):
        accepted = getattr(parser, "accepted", parser.__name__)
        raise ConfigError(f"{section}.{key}: cannot parse {text!r} (expected {accepted})") from None
    if check is not None and value is not None and not check(value):
        raise ConfigError(f"{section}.{key} = {text!r} out of range; accepted {check.accepted}")
    return value


def split_override(item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like section.key=value")
    name, value = item.split("=", 1)
    if "." not in name:
        raise ConfigError(f"override {item!r} must name a section: section.key=value")
    section, key = name.strip().split(".", 1)
    return section.strip(), key.strip(), value.strip()


def _merge(raw, section, key, value, origin):
    if section not in SCHEMA:
        raise ConfigError(f"{origin}: unknown section [{section}]; accepted {', '.join(SCHEMA)}")
    if key not in SCHEMA[section]:
        raise ConfigError(f"{origin}: unknown key {section}.{key}; accepted "
                          f"{', '.join(SCHEMA[section])}")
    raw[section][key] = value


def load_raw(path=None, overrides=()):
    """Defaults, then the file, then overrides (later wins). Returns section -> key -> text."""
    raw = {s: dict(v) for s, v in DEFAULTS.items()}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except configparser.Error as exc:
            raise ConfigError(f"config file {path}: {exc}") from None
        for section in cp.sections():
            for key, value in cp[section].items():
                _merge(raw, section, key, value, str(path))
    for item in overrides:
        section, key, value = split_override(item)
        _merge(raw, section, key, value, "override")
    return raw


def parse_config(path=None, overrides=(), check_paths=True):
    """Resolve and validate a full experiment configuration."""
    raw = load_raw(path, overrides)
    v = {s: {k: _parse_value(s, k, t) for k, t in keys.items()} for s, keys in raw.items()}
    d = v["data"]
    dataset = d["dataset"]

    synth = None
    if dataset == "synthetic":
        window = d["window"] or SYNTH_WINDOW
        channels = d["channels"] or SYNTH_CHANNELS
        n_classes = d["classes"] or SYNTH_CLASSES
        groups = d["groups"] or SYNTH_GROUPS
        s = v["synth"]
        synth = SynthConfig(n_subjects=s["subjects"], n_classes=n_classes, channels=channels,
                            length=s["length"], recordings_per_class=s["recordings_per_class"],
                            components=s["components"], freq_min=s["freq_min"],
                            freq_max=s["freq_max"], offset_sigma=s["offset_sigma"],
                            scale_sigma=s["scale_sigma"], bias_sigma=s["bias_sigma"],
                            rotation_deg=s["rotation_deg"], tempo_sigma=s["tempo_sigma"],
                            noise_sigma=s["noise_sigma"])
        synth.validate()
        if not s["shift"]:
            synth = synth.without_shift()
        if groups > synth.n_subjects:
            raise ConfigError(f"data.groups = {groups} exceeds synth.subjects = {synth.n_subjects}")
    elif dataset in PRESETS:
        preset = PRESETS[dataset]
        window = d["window"] or preset.window
        channels = d["channels"] or preset.channels
        n_classes = d["classes"] or preset.n_classes
        groups = d["groups"] or preset.groups
        if "preset" not in _explicit(path, overrides, "model"):
            raw["model"]["preset"] = preset.architecture
            v["model"]["preset"] = preset.architecture
    else:
        window, channels, n_classes, groups = d["window"], d["channels"], d["classes"], d["groups"]
        missing = [k for k, val in (("window", window), ("channels", channels),
                                    ("classes", n_classes), ("groups", groups)) if val is None]
        if missing:
            raise ConfigError(f"dataset=csv needs explicit data.{', data.'.join(missing)}")

    for key, val, lo in (("window", window, 2), ("channels", channels, 1),
                         ("classes", n_classes, 2), ("groups", groups, 2)):
        if val < lo:
            raise ConfigError(f"data.{key} = {val} out of range; accepted [{lo}, inf]")

    if dataset != "synthetic":
        if not d["path"]:
            raise ConfigError(f"dataset={dataset} requires data.path")
        if check_paths and not os.path.exists(d["path"]):
            raise ConfigError(f"data.path {d['path']!r} does not exist")

    a = v["augment"]
    aug = AugmentParams(perm_segments=a["perm_segments"], timewarp_knots=a["timewarp_knots"],
                        timewarp_sigma=a["timewarp_sigma"], scale_sigma=a["scale_sigma"],
                        magwarp_knots=a["magwarp_knots"], magwarp_sigma=a["magwarp_sigma"],
                        jitter_sigma=a["jitter_sigma"], randsample_points=a["randsample_points"],
                        rotation_per_triad=a["rotation_per_triad"])
    aug.validate(window)

    m = v["model"]
    arch_kw = dict(ARCH_PRESETS[m["preset"]])
    if raw["model"]["conv_layers"].strip():
        arch_kw["conv_layers"] = m["conv_layers"]
    if raw["model"]["fc_feature_dim"].strip():
        arch_kw["fc_feature_dim"] = m["fc_feature_dim"]
    arch_kw["projection_dim"] = m["projection_dim"]
    arch = ArchitectureSpec(channels, window, n_classes, **arch_kw).validate()

    lo, t = v["loss"], v["train"]
    train = TrainConfig(
        weights=LossWeights(lo["lambda"], lo["beta"], lo["gamma"], lo["tau"]),
        metric=DistanceMetric(lo["metric"]), augment=True, aug_params=aug, aug_mode=a["mode"],
        lr=t["lr"], batch_size=t["batch_size"], epochs=t["epochs"], detach_dp=lo["detach_dp"],
        supcon_reduction=lo["supcon_reduction"], seed=t["seeds"][0]).validate()

    out = v["output"]
    output_dir = out["dir"] or os.environ.get(OUTPUT_ROOT_ENV, "") or "ddlearn-runs"
    raw["output"]["dir"] = output_dir
    # echo the resolved preset values so the saved config is self-contained
    raw["data"].update(window=str(window), channels=str(channels), classes=str(n_classes),
                       groups=str(groups))
    return ExperimentConfig(
        dataset=dataset, data_path=d["path"], window=window, overlap=d["overlap"],
        channels=channels, n_classes=n_classes, groups=groups, fractions=d["fractions"],
        train=train, variant=t["variant"], seeds=t["seeds"], workers=t["workers"],
        architecture=arch, synth=synth, synth_seed=v["synth"]["seed"], output_dir=output_dir,
        save_checkpoints=out["checkpoints"], export_embeddings=out["embeddings"], raw=raw)


def _explicit(path, overrides, section):
    """Keys of ``section`` set by the file or overrides rather than defaults."""
    keys = set()
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        cp.read(path)
        if cp.has_section(section):
            keys.update(cp[section].keys())
    for item in overrides:
        s, k, _ = split_override(item)
        if s == section:
            keys.add(k)
    return keys
