"""Compare the compiled and numpy kernel backends on the hot ops.

Run directly: python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from cufsr import kernels


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    cases = [
        ("conv2d 64x64 C64 K3", "conv2d_fwd",
         (rng.random((64, 64, 64), dtype=np.float32),
          rng.random((64, 64, 3, 3), dtype=np.float32).astype(np.float32),
          rng.random(64, dtype=np.float32))),
        ("conv2d 128x128 C32 K3", "conv2d_fwd",
         (rng.random((128, 128, 32), dtype=np.float32),
          rng.random((32, 32, 3, 3), dtype=np.float32),
          rng.random(32, dtype=np.float32))),
        ("depthwise 128x128 C64 K3", "depthwise_fwd",
         (rng.random((128, 128, 64), dtype=np.float32),
          rng.random((64, 3, 3), dtype=np.float32))),
        ("depthwise 256x256 C64 K5", "depthwise_fwd",
         (rng.random((256, 256, 64), dtype=np.float32),
          rng.random((64, 5, 5), dtype=np.float32))),
    ]
    backends = ["numpy"]
    if kernels.compiled_available():
        backends.append("c")
    else:
        print("compiled backend unavailable; benchmarking numpy only")

    print(f"{'case':<28}" + "".join(f"{b:>12}" for b in backends) + f"{'ratio':>10}")
    for label, op, args in cases:
        times = {}
        for b in backends:
            fn = getattr(kernels.get_backend(b), op)
            times[b] = _time(fn, *args)
        row = f"{label:<28}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{times['numpy'] / times['c']:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
