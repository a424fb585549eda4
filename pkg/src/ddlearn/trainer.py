"""Joint training, validation-based model selection and inference."""
import contextlib
import csv
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .augment import AugmentParams, augment_batch
from .data.windows import WindowSet
from .errors import ConfigError, DimensionError, TrainingError
from .losses import (DistanceMetric, LossWeights, classification_loss, diversity_loss,
                     selfsup_loss, supcon_loss, total_loss)
from .metrics import evaluate
from .model import build, domain_logits, forward_features, forward_heads, project
from .nn import Adam, Tensor, no_grad

log = logging.getLogger(__name__)

LOSS_COLUMNS = ("l_cls", "l_dg", "l_dp", "l_de", "total")


@dataclass(frozen=True)
class TrainConfig:
    weights: LossWeights = LossWeights()
    metric: DistanceMetric = DistanceMetric.DISCRIMINATOR
    augment: bool = True
    aug_params: AugmentParams = AugmentParams()
    aug_mode: str = "one"
    lr: float = 8e-4
    batch_size: int = 64
    epochs: int = 150
    detach_dp: bool = False
    supcon_reduction: str = "sum"
    seed: int = 0

    def validate(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")
        if self.aug_mode not in ("one", "all"):
            raise ConfigError(f"aug_mode must be 'one' or 'all', got {self.aug_mode!r}")
        if self.supcon_reduction not in ("sum", "mean"):
            raise ConfigError("supcon_reduction must be 'sum' or 'mean'")
        DistanceMetric(self.metric)
        self.aug_params.validate()
        return self


# Ablation ladder: which pieces of the objective are switched on.
VARIANTS = {
    "erm": dict(augment=False, lam=False, beta=False, gamma=False),
    "erm+a": dict(augment=True, lam=False, beta=False, gamma=False),
    "erm+dg": dict(augment=True, lam=True, beta=False, gamma=False),
    "erm+dg+dp": dict(augment=True, lam=True, beta=True, gamma=False),
    "erm+dg+de": dict(augment=True, lam=True, beta=False, gamma=True),
    "ddlearn": dict(augment=True, lam=True, beta=True, gamma=True),
}


def variant_config(base, name):
    """``base`` with the loss weights of the named ablation variant zeroed out."""
    if name not in VARIANTS:
        raise ConfigError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}")
    v = VARIANTS[name]
    w = base.weights
    weights = LossWeights(w.lam if v["lam"] else 0.0, w.beta if v["beta"] else 0.0,
                          w.gamma if v["gamma"] else 0.0, w.tau)
    return replace(base, weights=weights, augment=v["augment"])


@dataclass
class TrainState:
    epoch: int = 0
    optimizer: Adam = None
    best_val_accuracy: float = -1.0
    best_epoch: int = -1
    best_params: dict = None
    history: list = field(default_factory=list)


@dataclass
class TrainResult:
    model: object
    state: TrainState
    val_report: object


def batch_losses(model, config, ori, step_key):
    """Forward one mini-batch and return ``(total, {component: value})``.

    ``step_key`` seeds the augmentation streams of this batch. Components with
    a zero weight are evaluated for logging only and stay out of the graph.
    """
    w = config.weights
    if config.augment:
        aug = augment_batch(ori, step_key, config.aug_params, config.aug_mode)
        batch = WindowSet.concat([ori, aug])
        domain = np.concatenate([np.zeros(len(ori), np.int64), np.ones(len(aug), np.int64)])
    else:
        batch = ori
        domain = None

    feats = forward_features(model, batch.x)
    act_logits, aug_logits, dom_logits = forward_heads(model, feats)
    l_cls = classification_loss(act_logits, batch.y)
    l_dg = l_dp = l_de = None
    if config.augment:
        with _grad_unless(w.lam == 0):
            l_dg = selfsup_loss(aug_logits, batch.aug_kind)
        with _grad_unless(w.beta == 0):
            f_dp = feats
            if config.detach_dp:
                # discriminator/distance trains on frozen features; extractor gets no L_dp gradient
                f_dp = feats.detach()
                dom_logits = domain_logits(model, f_dp)
            l_dp = diversity_loss(config.metric, f_dp, dom_logits, domain)
        with _grad_unless(w.gamma == 0):
            l_de = supcon_loss(project(model, feats), batch.y, w.tau, config.supcon_reduction)
    total = total_loss(l_cls, l_dg, l_dp, l_de, w)
    parts = {"l_cls": l_cls, "l_dg": l_dg, "l_dp": l_dp, "l_de": l_de, "total": total}
    return total, {k: (0.0 if v is None else float(v.data)) for k, v in parts.items()}


def _grad_unless(skip):
    return no_grad() if skip else contextlib.nullcontext()


def train(config, arch, train_set, val_set, callback=None):
    """Train a fresh model on source data and keep the best-on-validation weights.

    Only source training and validation windows are accepted; target data
    never enters this function.
    """
    config.validate()
    if len(train_set) == 0 or len(val_set) == 0:
        raise ConfigError("training and validation sets must be nonempty")
    model = build(arch, config.seed)
    opt = Adam(model.parameters(), lr=config.lr)
    state = TrainState(optimizer=opt)
    batch_rng = np.random.default_rng([config.seed, 64])
    n = len(train_set)
    steps = math.ceil(n / config.batch_size)

    for epoch in range(config.epochs):
        order = batch_rng.permutation(n)
        sums = dict.fromkeys(LOSS_COLUMNS, 0.0)
        for step in range(steps):
            idx = np.sort(order[step * config.batch_size:(step + 1) * config.batch_size])
            ori = train_set.subset(idx)
            model.zero_grad()
            total, parts = batch_losses(model, config, ori, (config.seed, epoch, step))
            if not all(np.isfinite(v) for v in parts.values()):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {step}: {parts}",
                    {"epoch": epoch, "batch": step, "batch_index": idx.tolist(), **parts})
            total.backward()
            opt.step()
            for k in LOSS_COLUMNS:
                sums[k] += parts[k]
        row = {"epoch": epoch, **{k: sums[k] / steps for k in LOSS_COLUMNS}}
        row["val_accuracy"] = accuracy(model, val_set)
        state.history.append(row)
        state.epoch = epoch + 1
        if row["val_accuracy"] > state.best_val_accuracy:
            state.best_val_accuracy = row["val_accuracy"]
            state.best_epoch = epoch
            state.best_params = model.copy_params()
        if callback is not None:
            callback(epoch, row)
        log.debug("epoch %d %s", epoch, row)

    model.load_params(state.best_params)
    val_report = evaluate(infer(model, val_set), val_set.y, arch.n_activity_classes, state.history)
    return TrainResult(model, state, val_report)


def _windows_x(windows):
    if isinstance(windows, WindowSet):
        return windows.x
    if isinstance(windows, Tensor):
        return windows.data
    x = np.asarray(windows, dtype=np.float64)
    return x


def activity_logits(model, windows, chunk=512):
    x = _windows_x(windows)
    if x.ndim != 4 or x.shape[1:] != (model.spec.in_channels, 1, model.spec.width):
        raise DimensionError(f"windows shape {x.shape} does not match the model input "
                             f"(b, {model.spec.in_channels}, 1, {model.spec.width})")
    out = []
    with no_grad():
        for s in range(0, len(x), chunk):
            act, _, _ = forward_heads(model, forward_features(model, x[s:s + chunk]))
            out.append(act.data)
    return np.concatenate(out) if out else np.zeros((0, model.spec.n_activity_classes))


def infer(model, windows):
    """Predicted activity per window: argmax of activity logits, ties to the lowest index."""
    return np.argmax(activity_logits(model, windows), axis=1)


def accuracy(model, windows):
    return float(np.mean(infer(model, windows) == windows.y))


def features_of(model, windows, chunk=512):
    x = _windows_x(windows)
    with no_grad():
        return np.concatenate([forward_features(model, x[s:s + chunk]).data
                               for s in range(0, len(x), chunk)])


def export_embeddings(model, windows, path, domain=None):
    """CSV of feature vector, activity label, aug kind and domain flag per window."""
    ws = windows if isinstance(windows, WindowSet) else WindowSet.from_windows(windows)
    feats = features_of(model, ws)
    if domain is None:
        domain = (ws.aug_kind != 0).astype(np.int64)
    header = [f"f_{i}" for i in range(feats.shape[1])] + ["activity", "aug_kind", "domain"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(len(ws)):
            writer.writerow([repr(float(v)) for v in feats[i]]
                            + [int(ws.y[i]), int(ws.aug_kind[i]), int(domain[i])])
    return path
