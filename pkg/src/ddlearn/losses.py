"""Training objectives and distribution distances.

All differentiable losses take and return :class:`~ddlearn.nn.Tensor` values
so they can sit inside one backward pass.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .augment import N_AUG_CLASSES
from .errors import ConfigError, DimensionError, InputError
from .nn import Tensor, l2_normalize, masked_logsumexp, softmax
from .nn.tensor import _wrap

LOG_FLOOR = 1e-12
VAR_FLOOR = 1e-6

# hyper-parameter grid used for the sensitivity sweeps
LAMBDA_GRID = (0.01, 0.1, 1.0, 10.0)
BETA_GRID = (0.01, 0.1, 1.0, 10.0)
GAMMA_GRID = (0.1, 0.5, 1.0, 5.0, 10.0)


class DistanceMetric(str, Enum):
    DISCRIMINATOR = "discriminator"
    MMD = "mmd"
    KL = "kl"


@dataclass(frozen=True)
class LossWeights:
    lam: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    tau: float = 0.5

    def __post_init__(self):
        for name in ("lam", "beta", "gamma", "tau"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"loss weight {name} must be finite")
        for name in ("lam", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigError(f"loss weight {name} must be >= 0")
        if self.tau <= 0:
            raise ConfigError(f"temperature tau must be > 0, got {self.tau}")


def _labels(labels, k):
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise InputError(f"labels must lie in [0, {k}), got range [{labels.min()}, {labels.max()}]")
    return labels


def cross_entropy(probs, labels):
    """Mean of ``-log p[label]`` over the batch, with ``log`` floored at 1e-12."""
    probs = _wrap(probs)
    if probs.ndim != 2:
        raise DimensionError(f"cross_entropy expects (b, K) probabilities, got {probs.shape}")
    labels = _labels(labels, probs.shape[1])
    if len(labels) != probs.shape[0]:
        raise DimensionError(f"batch axis: {probs.shape[0]} rows vs {len(labels)} labels")
    picked = probs[np.arange(len(labels)), labels]
    return -picked.maximum(LOG_FLOOR).log().mean()


def classification_loss(logits, labels):
    return cross_entropy(softmax(logits), labels)


def selfsup_loss(aug_logits, aug_labels):
    """Augmentation-type classification over the fixed 8 classes."""
    aug_logits = _wrap(aug_logits)
    if aug_logits.ndim != 2 or aug_logits.shape[1] != N_AUG_CLASSES:
        raise DimensionError(f"augmentation logits must be (b, {N_AUG_CLASSES}), got {aug_logits.shape}")
    return cross_entropy(softmax(aug_logits), aug_labels)


def domain_disc_loss(disc_logits, domain_labels):
    """Binary original(0)/augmented(1) cross-entropy of the domain discriminator."""
    disc_logits = _wrap(disc_logits)
    if disc_logits.ndim != 2 or disc_logits.shape[1] != 2:
        raise DimensionError(f"domain logits must be (b, 2), got {disc_logits.shape}")
    return cross_entropy(softmax(disc_logits), domain_labels)


def supcon_loss(features, labels, tau, reduction="sum"):
    """Supervised contrastive loss over every sample as an anchor.

    For anchor ``i`` with positives ``P(i)`` (same label, excluding ``i``) and
    contrast set ``A(i)`` (everything but ``i``) on L2-normalised features::

        l_i = -1/|P(i)| * sum_p log( exp(z_i.z_p/tau) / sum_{a in A(i)} exp(z_i.z_a/tau) )

    Anchors without positives are skipped. ``reduction="sum"`` adds the
    per-anchor terms; ``"mean"`` averages them over the valid anchors.
    """
    if tau <= 0:
        raise ConfigError(f"temperature tau must be > 0, got {tau}")
    if reduction not in ("sum", "mean"):
        raise ConfigError(f"supcon reduction must be 'sum' or 'mean', got {reduction!r}")
    features = _wrap(features)
    if features.ndim != 2 or features.shape[0] < 2:
        raise DimensionError(f"supcon needs (n>=2, d) features, got {features.shape}")
    labels = np.asarray(labels).reshape(-1)
    n = features.shape[0]
    if len(labels) != n:
        raise DimensionError(f"batch axis: {n} features vs {len(labels)} labels")

    not_self = ~np.eye(n, dtype=bool)
    positives = (labels[:, None] == labels[None, :]) & not_self
    n_pos = positives.sum(axis=1)
    valid = n_pos > 0
    if not valid.any():
        return Tensor(0.0) if not features.requires_grad else (features * 0.0).sum()

    z = l2_normalize(features)
    sim = (z @ z.T) * (1.0 / tau)
    lse = masked_logsumexp(sim, not_self)
    weights = np.where(positives, 1.0 / np.maximum(n_pos, 1)[:, None], 0.0)
    pos_mean = (sim * weights).sum(axis=1)
    per_anchor = (lse - pos_mean) * valid.astype(np.float64)
    total = per_anchor.sum()
    if reduction == "mean":
        total = total * (1.0 / valid.sum())
    return total


def proxy_a_distance(error_rate):
    """``2 (1 - 2 err)`` for a domain classifier with error rate ``err``."""
    if not 0.0 <= error_rate <= 1.0:
        raise InputError(f"error rate must lie in [0, 1], got {error_rate}")
    return 2.0 * (1.0 - 2.0 * error_rate)


def _pairwise_sq_dists(a, b):
    diff = a.reshape(a.shape[0], 1, a.shape[1]) - b.reshape(1, b.shape[0], b.shape[1])
    return (diff * diff).sum(axis=2)


def median_bandwidth(x, y):
    """Median pairwise Euclidean distance of the pooled sample (no gradient)."""
    z = np.concatenate([np.asarray(getattr(x, "data", x)), np.asarray(getattr(y, "data", y))])
    sq = ((z[:, None, :] - z[None, :, :]) ** 2).sum(axis=2)
    d = np.sqrt(sq[np.triu_indices(len(z), k=1)])
    d = d[d > 0]
    return float(np.median(d)) if d.size else 1.0


def mmd(x, y, bandwidth="median"):
    """Biased (V-statistic) squared MMD with a Gaussian kernel of width ``bandwidth``.

    ``bandwidth="median"`` picks the median pairwise distance of the pooled
    sample, treated as a constant for differentiation.
    """
    x, y = _wrap(x), _wrap(y)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise DimensionError(f"mmd expects (n, d) and (m, d) samples, got {x.shape} and {y.shape}")
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise InputError("mmd needs at least 2 samples on each side")
    if isinstance(bandwidth, str):
        if bandwidth != "median":
            raise ConfigError(f"unknown bandwidth rule {bandwidth!r}")
        bandwidth = median_bandwidth(x, y)
    if not bandwidth > 0:
        raise ConfigError(f"mmd bandwidth must be > 0, got {bandwidth}")
    scale = -1.0 / (2.0 * bandwidth * bandwidth)
    kxx = (_pairwise_sq_dists(x, x) * scale).exp().mean()
    kyy = (_pairwise_sq_dists(y, y) * scale).exp().mean()
    kxy = (_pairwise_sq_dists(x, y) * scale).exp().mean()
    return kxx + kyy - 2.0 * kxy


def _moments(x):
    mu = x.mean(axis=0)
    centred = x - mu
    var = (centred * centred).mean(axis=0).maximum(VAR_FLOOR)
    return mu, var


def kl_gaussian(x, y):
    """KL(N(mu_x, diag var_x) || N(mu_y, diag var_y)) from sample moments.

    Variances are the biased per-dimension estimates floored at 1e-6.
    """
    x, y = _wrap(x), _wrap(y)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise DimensionError(f"kl expects (n, d) and (m, d) samples, got {x.shape} and {y.shape}")
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise InputError("kl needs at least 2 samples on each side")
    mu_x, var_x = _moments(x)
    mu_y, var_y = _moments(y)
    delta = mu_x - mu_y
    terms = (var_y / var_x).log() + (var_x + delta * delta) / var_y - 1.0
    return terms.sum() * 0.5


def diversity_loss(metric, features=None, domain_logits=None, domain_labels=None,
                   bandwidth="median"):
    """``L_dp``: discriminator cross-entropy, or the negated MMD / KL between
    original (domain 0) and augmented (domain 1) features."""
    metric = DistanceMetric(metric)
    if metric is DistanceMetric.DISCRIMINATOR:
        return domain_disc_loss(domain_logits, domain_labels)
    labels = np.asarray(domain_labels)
    ori = features[np.flatnonzero(labels == 0)]
    aug = features[np.flatnonzero(labels == 1)]
    if metric is DistanceMetric.MMD:
        return -mmd(ori, aug, bandwidth)
    return -kl_gaussian(ori, aug)


def total_loss(l_cls, l_dg, l_dp, l_de, weights):
    """``l_cls + lam*l_dg + beta*l_dp + gamma*l_de``; zero-weighted terms are dropped."""
    total = l_cls
    for w, term in ((weights.lam, l_dg), (weights.beta, l_dp), (weights.gamma, l_de)):
        if w != 0 and term is not None:
            total = total + w * term
    return total
