"""The shared conv feature extractor and its three linear heads."""
from dataclasses import asdict, dataclass, field

import numpy as np

from .augment import N_AUG_CLASSES
from .errors import ConfigError, DimensionError
from .nn import Parameter, conv2d, flatten, linear, load_checkpoint, maxpool2d, relu, save_checkpoint
from .nn.tensor import _wrap

N_DOMAIN_CLASSES = 2


@dataclass(frozen=True)
class ArchitectureSpec:
    in_channels: int
    width: int
    n_activity_classes: int
    conv_layers: tuple = ((16, 9), (32, 9))  # (out_channels, kernel_width) per conv
    fc_feature_dim: int = 64
    projection_dim: int = 0  # 0 disables the optional contrastive projection head

    def __post_init__(self):
        object.__setattr__(self, "conv_layers", tuple(tuple(int(v) for v in layer)
                                                      for layer in self.conv_layers))

    @property
    def n_aug_classes(self):
        return N_AUG_CLASSES

    @property
    def n_domain_classes(self):
        return N_DOMAIN_CLASSES

    def shape_trace(self):
        """Widths after each conv and pool, starting from the input width."""
        trace = [self.width]
        w = self.width
        for co, k in self.conv_layers:
            if k > w:
                raise ConfigError(f"conv kernel {k} wider than its input width {w}; "
                                  f"shape trace so far {trace}")
            w = w - k + 1
            trace.append(w)
            if w < 2:
                raise ConfigError(f"pool input width {w} < 2; shape trace so far {trace}")
            w //= 2
            trace.append(w)
        return trace

    @property
    def flat_dim(self):
        return self.conv_layers[-1][0] * self.shape_trace()[-1]

    def validate(self):
        if self.in_channels < 1 or self.width < 1 or self.n_activity_classes < 2:
            raise ConfigError("architecture needs >=1 channel, width >=1 and >=2 classes")
        if not self.conv_layers:
            raise ConfigError("architecture needs at least one conv layer")
        if self.fc_feature_dim < 1 or self.projection_dim < 0:
            raise ConfigError("fc_feature_dim must be >= 1 and projection_dim >= 0")
        self.shape_trace()
        return self

    def to_dict(self):
        d = asdict(self)
        d["conv_layers"] = [list(layer) for layer in self.conv_layers]
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**{**d, "conv_layers": tuple(tuple(layer) for layer in d["conv_layers"])})


ARCH_PRESETS = {
    "dsads": dict(conv_layers=((16, 9), (32, 9)), fc_feature_dim=64),
    "pamap2": dict(conv_layers=((16, 9), (32, 9)), fc_feature_dim=64),
    "uschad": dict(conv_layers=((16, 6), (32, 6), (64, 6)), fc_feature_dim=128),
}


def preset_spec(name, in_channels, width, n_classes, **overrides):
    if name not in ARCH_PRESETS:
        raise ConfigError(f"unknown architecture preset {name!r}; choose from {sorted(ARCH_PRESETS)}")
    return ArchitectureSpec(in_channels, width, n_classes, **{**ARCH_PRESETS[name], **overrides})


@dataclass
class DDLearnModel:
    spec: ArchitectureSpec
    params: dict = field(default_factory=dict)  # name -> Parameter, in registration order

    def parameters(self):
        return list(self.params.values())

    def named_parameters(self):
        return list(self.params.items())

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def extractor_parameters(self):
        return [p for n, p in self.params.items() if n.startswith(("conv", "fc."))]

    @property
    def n_parameters(self):
        return int(sum(p.data.size for p in self.params.values()))

    def copy_params(self):
        return {n: p.data.copy() for n, p in self.params.items()}

    def load_params(self, values):
        for n, p in self.params.items():
            if values[n].shape != p.data.shape:
                raise DimensionError(f"parameter {n}: shape {values[n].shape} vs {p.data.shape}")
            p.data[...] = values[n]

    def save(self, path, extra=None):
        save_checkpoint(path, self.params, {"architecture": self.spec.to_dict(), **(extra or {})})

    @classmethod
    def load(cls, path):
        header, values = load_checkpoint(path)
        model = build(ArchitectureSpec.from_dict(header["architecture"]), seed=0)
        model.load_params(values)
        return model


def _uniform(rng, shape, fan_in):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, shape)


def build(spec, seed):
    """Fresh model with fan-in scaled uniform weights and zero biases."""
    spec.validate()
    rng = np.random.default_rng([int(seed), 1337])
    params = {}

    def add(name, shape, fan_in):
        params[name + ".weight"] = Parameter(_uniform(rng, shape, fan_in), name=name + ".weight")
        params[name + ".bias"] = Parameter(np.zeros(shape[0]), name=name + ".bias")

    c = spec.in_channels
    for i, (co, k) in enumerate(spec.conv_layers):
        add(f"conv{i}", (co, c, 1, k), c * k)
        c = co
    add("fc", (spec.fc_feature_dim, spec.flat_dim), spec.flat_dim)
    d = spec.fc_feature_dim
    add("head.activity", (spec.n_activity_classes, d), d)
    add("head.aug", (N_AUG_CLASSES, d), d)
    add("head.domain", (N_DOMAIN_CLASSES, d), d)
    if spec.projection_dim:
        add("proj", (spec.projection_dim, d), d)
    return DDLearnModel(spec, params)


def forward_features(model, batch):
    """``(b, c, 1, w)`` windows -> ``(b, fc_feature_dim)`` rectified features."""
    x = _wrap(batch)
    spec = model.spec
    if x.ndim != 4 or x.shape[1:] != (spec.in_channels, 1, spec.width):
        raise DimensionError(f"batch shape {x.shape} does not match (b, {spec.in_channels}, 1, "
                             f"{spec.width})")
    p = model.params
    for i in range(len(spec.conv_layers)):
        x = maxpool2d(relu(conv2d(x, p[f"conv{i}.weight"], p[f"conv{i}.bias"])))
    return relu(linear(flatten(x), p["fc.weight"], p["fc.bias"]))


def forward_heads(model, features):
    """Activity, augmentation-type and domain logits from shared features."""
    features = _wrap(features)
    d = model.spec.fc_feature_dim
    if features.ndim != 2 or features.shape[1] != d:
        raise DimensionError(f"features axis 1 must be {d}, got shape {features.shape}")
    p = model.params
    return (linear(features, p["head.activity.weight"], p["head.activity.bias"]),
            linear(features, p["head.aug.weight"], p["head.aug.bias"]),
            linear(features, p["head.domain.weight"], p["head.domain.bias"]))


def domain_logits(model, features):
    p = model.params
    return linear(features, p["head.domain.weight"], p["head.domain.bias"])


def project(model, features):
    """Contrastive projection (identity when the architecture has no projection head)."""
    if not model.spec.projection_dim:
        return features
    p = model.params
    return linear(features, p["proj.weight"], p["proj.bias"])
