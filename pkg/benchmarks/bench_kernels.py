"""Time the numpy and Cython kernel backends on per-kernel calls and a full training run.

    python benchmarks/bench_kernels.py [--batch 512] [--width 64] [--repeat 20]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from lipmono import kernels
from lipmono.monotone import MonotoneMask, MonotoneModel
from lipmono.network import build_network
from lipmono.optim import TrainConfig, fit


def kernel_cases(batch: int, width: int):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((batch, width))
    W = rng.standard_normal((width, width))
    b = rng.standard_normal(width)
    dZ = rng.standard_normal((batch, width))
    v = rng.standard_normal(width)
    v /= np.linalg.norm(v)
    _, perm = kernels.groupsort_forward(A, 2)
    _, reflect = kernels.householder_forward(A, v)
    return {
        "linear_forward": lambda: kernels.linear_forward(A, W, b),
        "linear_backward": lambda: kernels.linear_backward(A, W, dZ, True),
        "groupsort_forward G=2": lambda: kernels.groupsort_forward(A, 2),
        "groupsort_forward G=8": lambda: kernels.groupsort_forward(A, 8),
        "groupsort_backward": lambda: kernels.groupsort_backward(perm, dZ),
        "householder_forward": lambda: kernels.householder_forward(A, v),
        "householder_backward": lambda: kernels.householder_backward(reflect, v, dZ),
    }


def training_run(batch: int, width: int, epochs: int = 200) -> None:
    rng = np.random.default_rng(1)
    X = rng.standard_normal((batch, 8))
    y = X[:, 0] + np.abs(X[:, 1])
    mask = MonotoneMask(np.array([1, 0, 0, 0, 0, 0, 0, 0]))
    model = MonotoneModel(build_network(8, (width, width)), mask)
    fit(model, X, y, TrainConfig(epochs=epochs, lr=1e-2))


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--batch", type=int, default=512)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--repeat", type=int, default=20)
    args = p.parse_args(argv)

    backends = kernels.available_backends()
    results: dict[str, dict[str, float]] = {}
    for backend in backends:
        kernels.use_backend(backend)
        timings = {}
        for name, fn in kernel_cases(args.batch, args.width).items():
            timings[name] = min(timeit.repeat(fn, number=args.repeat, repeat=5)) / args.repeat
        timings["fit 200 epochs"] = min(
            timeit.repeat(lambda: training_run(args.batch, args.width), number=1, repeat=3)
        )
        results[backend] = timings

    print(f"batch={args.batch} width={args.width}")
    header = f"{'case':<24}" + "".join(f"{b + ' (ms)':>16}" for b in backends)
    if "cython" in results:
        header += f"{'speedup':>10}"
    print(header)
    for case in results[backends[0]]:
        row = f"{case:<24}" + "".join(f"{results[b][case] * 1e3:>16.4f}" for b in backends)
        if "cython" in results:
            row += f"{results['python'][case] / results['cython'][case]:>10.2f}"
        print(row)


if __name__ == "__main__":
    main()
