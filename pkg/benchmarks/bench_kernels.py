"""Compare the compiled and numpy conv/pool kernels on training-sized batches.

    python benchmarks/bench_kernels.py [--repeat N]

Also times one full DDLearn training step (augmentation included) under each
backend, and checks both backends agree before timing anything.
"""
import argparse
import timeit

import numpy as np

from ddlearn import _kernels
from ddlearn.data import WindowSet
from ddlearn.model import ArchitectureSpec, build
from ddlearn.trainer import TrainConfig, batch_losses

SHAPES = [
    # (batch, channels, width), (out_channels, channels, kernel)
    ((128, 9, 64), (16, 9, 9)),      # synthetic benchmark, first conv
    ((128, 16, 28), (32, 16, 9)),    # synthetic benchmark, second conv
    ((128, 45, 125), (16, 45, 9)),   # DSADS-sized first conv
    ((128, 27, 512), (16, 27, 9)),   # PAMAP2-sized first conv
]


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def agree(backends, rng):
    x = rng.normal(size=(3, 4, 17))
    w = rng.normal(size=(5, 4, 4))
    b = rng.normal(size=5)
    g = rng.normal(size=(3, 5, 14))
    ref = None
    for m in backends.values():
        out = [m.conv1d_forward(x, w, b), *m.conv1d_backward(x, w, g), m.maxpool1d_forward(x)[0]]
        if ref is None:
            ref = out
        else:
            for a, c in zip(ref, out):
                assert np.allclose(a, c, rtol=1e-12, atol=1e-12)


def kernel_table(backends, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for xs, ws in SHAPES:
        x = rng.normal(size=xs)
        w = rng.normal(size=ws)
        b = rng.normal(size=ws[0])
        g = rng.normal(size=(xs[0], ws[0], xs[2] - ws[2] + 1))
        pooled = rng.normal(size=(xs[0], ws[0], xs[2] - ws[2] + 1))
        for name, m in backends.items():
            _, idx = m.maxpool1d_forward(pooled)
            gp = rng.normal(size=idx.shape)
            rows.append((f"{xs} * {ws}", name,
                         best_of(lambda: m.conv1d_forward(x, w, b), repeat, 5),
                         best_of(lambda: m.conv1d_backward(x, w, g), repeat, 5),
                         best_of(lambda: m.maxpool1d_forward(pooled), repeat, 5),
                         best_of(lambda: m.maxpool1d_backward(gp, idx, pooled.shape[2]), repeat, 5)))
    return rows


def step_time(backend, repeat):
    rng = np.random.default_rng(1)
    spec = ArchitectureSpec(9, 64, 6)
    model = build(spec, 0)
    ori = WindowSet(rng.normal(size=(64, 9, 1, 64)), rng.integers(0, 6, 64), np.zeros(64, np.int64))
    config = TrainConfig()
    saved = _kernels.active
    _kernels.active = backend
    try:
        def step():
            model.zero_grad()
            total, _ = batch_losses(model, config, ori, (0, 0, 0))
            total.backward()
        return best_of(step, repeat, 3)
    finally:
        _kernels.active = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = _kernels.available_backends()
    agree(backends, np.random.default_rng(2))
    print(f"backends: {', '.join(backends)} (active: {_kernels.BACKEND})")
    print(f"{'shape':<36} {'backend':<8} {'conv fwd':>10} {'conv bwd':>10} {'pool fwd':>10} {'pool bwd':>10}")
    for shape, name, *times in kernel_table(backends, args.repeat):
        print(f"{shape:<36} {name:<8} " + " ".join(f"{1e3 * t:>8.2f}ms" for t in times))
    print()
    for name, m in backends.items():
        print(f"full training step (64+64 windows, 9x64) with {name:<7}: "
              f"{1e3 * step_time(m, args.repeat):.1f} ms")


if __name__ == "__main__":
    main()
