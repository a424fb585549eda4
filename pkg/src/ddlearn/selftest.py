"""Gradient and oracle self-checks on a tiny model.

``gradient_report`` compares backprop gradients of every objective component
against central finite differences on a 2-channel, 8-feature model with a
batch of 4 original plus 4 augmented windows.
"""
import numpy as np

from .augment import augment_batch
from .data.windows import WindowSet
from .losses import (DistanceMetric, LossWeights, classification_loss, diversity_loss,
                     median_bandwidth, mmd, proxy_a_distance, selfsup_loss, supcon_loss,
                     total_loss)
from .model import ArchitectureSpec, build, forward_features, forward_heads
from .nn import finite_diff_grad, max_relative_error, no_grad

TINY_SPEC = ArchitectureSpec(3, 24, 3, conv_layers=((2, 3), (2, 3)), fc_feature_dim=8)
COMPONENTS = ("l_cls", "l_dg", "l_dp_discriminator", "l_dp_mmd", "l_dp_kl", "l_de",
              "total_discriminator", "total_mmd", "total_kl")


def tiny_problem(seed, batch=4, spec=TINY_SPEC, attempt=0):
    """Model, 4+4 window batch, domain flags and a frozen MMD bandwidth.

    Biases are redrawn away from zero: with zero biases a dead conv region
    feeds exact zeros into the next ReLU, which sits on its kink, where
    finite differences and any subgradient legitimately disagree.
    """
    model = build(spec, seed)
    rng = np.random.default_rng([int(seed), 4242, int(attempt)])
    for name, p in model.params.items():
        if name.endswith(".bias"):
            lo = 0.1 if name.startswith("fc") else -0.2
            p.data[...] = rng.uniform(lo, 0.3, p.data.shape)
    x = rng.normal(size=(batch, spec.in_channels, 1, spec.width))
    y = np.arange(batch) % spec.n_activity_classes  # every anchor has a positive when batch>=2K
    ori = WindowSet(x, y, np.zeros(batch, np.int64))
    aug = augment_batch(ori, (int(seed), 7, int(attempt)))
    data = WindowSet.concat([ori, aug])
    domain = np.r_[np.zeros(batch, np.int64), np.ones(batch, np.int64)]
    with no_grad():
        feats = forward_features(model, data.x)
    bandwidth = median_bandwidth(feats.data[:batch], feats.data[batch:])
    return model, data, domain, bandwidth


def components(model, data, domain, bandwidth, weights=LossWeights(1.0, 1.0, 1.0, 0.5)):
    """Every objective component as a list of scalar tensors, in ``COMPONENTS`` order."""
    feats = forward_features(model, data.x)
    act, aug_logits, dom = forward_heads(model, feats)
    l_cls = classification_loss(act, data.y)
    l_dg = selfsup_loss(aug_logits, data.aug_kind)
    l_dp = {m: diversity_loss(m, feats, dom, domain, bandwidth) for m in DistanceMetric}
    l_de = supcon_loss(feats, data.y, weights.tau)
    totals = [total_loss(l_cls, l_dg, l_dp[m], l_de, weights) for m in DistanceMetric]
    return [l_cls, l_dg, *(l_dp[m] for m in DistanceMetric), l_de, *totals]


def kink_margin(model, data):
    """Smallest distance of any ReLU input or max-pool pair from a non-smooth point."""
    from .nn import conv2d, flatten, linear, maxpool2d, relu
    p = model.params
    margins = []
    with no_grad():
        x = data.x
        for i in range(len(model.spec.conv_layers)):
            z = conv2d(x, p[f"conv{i}.weight"], p[f"conv{i}.bias"])
            margins.append(np.abs(z.data).min())
            r = relu(z)
            w = r.shape[-1] // 2 * 2
            pairs = r.data[..., :w].reshape(*r.shape[:-1], -1, 2)
            gap = np.abs(pairs[..., 0] - pairs[..., 1])
            # ties at exactly zero (both rectified) are harmless
            live = (pairs[..., 0] > 0) | (pairs[..., 1] > 0)
            if live.any():
                margins.append(gap[live].min())
            x = maxpool2d(r)
        z = linear(flatten(x), p["fc.weight"], p["fc.bias"])
        margins.append(np.abs(z.data).min())
    return float(min(margins))


def smooth_problem(seed, min_margin=1e-4, attempts=20):
    """First draw for ``seed`` whose activations sit at least ``min_margin`` from any kink."""
    for attempt in range(attempts):
        problem = tiny_problem(seed, attempt=attempt)
        if kink_margin(problem[0], problem[1]) >= min_margin:
            return problem
    raise RuntimeError(f"seed {seed}: no kink-free draw in {attempts} attempts")


def gradient_report(seed, h=1e-5):
    """Max relative error per component for one seed.

    The error floor scales with the loss value: central differences resolve
    a gradient only to about ``eps_machine * |f| / h``, so coordinates far
    below ``1e-6 * max(1, |f|)`` are compared in absolute terms.
    """
    model, data, domain, bandwidth = smooth_problem(seed)
    params = model.parameters()
    analytic = []
    for i in range(len(COMPONENTS)):
        model.zero_grad()
        components(model, data, domain, bandwidth)[i].backward()
        analytic.append([p.grad.copy() for p in params])
    with no_grad():
        values = [float(c.data) for c in components(model, data, domain, bandwidth)]
        numeric = finite_diff_grad(
            lambda: np.array([float(c.data) for c in components(model, data, domain, bandwidth)]),
            params, h)
    return {name: max_relative_error(analytic[i], [g[..., i] for g in numeric],
                                     floor=1e-6 * max(1.0, abs(values[i])))
            for i, name in enumerate(COMPONENTS)}


def supcon_double_loop(features, labels, tau):
    """Direct per-anchor, per-positive evaluation of the supervised contrastive loss."""
    z = features / np.maximum(np.linalg.norm(features, axis=1, keepdims=True), 1e-12)
    n = len(z)
    total = 0.0
    for i in range(n):
        pos = [p for p in range(n) if p != i and labels[p] == labels[i]]
        if not pos:
            continue
        denom = sum(np.exp(z[i] @ z[a] / tau) for a in range(n) if a != i)
        total += -sum(np.log(np.exp(z[i] @ z[p] / tau) / denom) for p in pos) / len(pos)
    return total


def run_checks(seeds=5, log=print):
    """Quick health check used by ``ddlearn check``; returns True when all pass."""
    ok = True

    def report(name, passed, detail):
        nonlocal ok
        ok &= passed
        log(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    worst = 0.0
    for seed in range(seeds):
        errors = gradient_report(seed)
        worst = max(worst, max(errors.values()))
    report("gradients", worst < 1e-4, f"max relative error {worst:.2e} over {seeds} seeds")

    rng = np.random.default_rng(0)
    gap = 0.0
    for _ in range(20):
        n, d = int(rng.integers(2, 17)), int(rng.integers(1, 9))
        f = rng.normal(size=(n, d))
        y = rng.integers(0, 3, n)
        tau = float(rng.choice([0.1, 0.5, 1.0]))
        gap = max(gap, abs(float(supcon_loss(f, y, tau).data) - supcon_double_loop(f, y, tau)))
    report("supcon", gap < 1e-10, f"max deviation from double loop {gap:.1e}")

    pad = [proxy_a_distance(e) for e in (0.0, 0.25, 0.5)]
    report("proxy A-distance", pad == [2.0, 1.0, 0.0], f"{pad}")

    x = rng.normal(size=(50, 2))
    same = float(mmd(x, x).data)
    report("mmd", same == 0.0, f"mmd(X, X) = {same}")
    return ok
