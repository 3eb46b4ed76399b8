"""Benchmark the temporal-convolution backends: compiled extension vs the
pure-numpy fallback.

Sizes mirror the real training configurations: the 1200-filter single-window
baseline, the 4x300 multi-window setup on 50-dim inputs (column height 60),
and the same on 400-dim inputs (height 470). The composite case chains
conv -> max-pool over all window sizes for one extended-context stack, which
is the hot path of a CNN training step.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from relclass.kernels import backend_name, conv_python, max_pool_over_time

IMPLS = {"python": conv_python}
try:
    from relclass.kernels import _convext

    IMPLS["c"] = _convext
except ImportError:
    pass


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench_case(name, d, t, n_filters, windows, repeats):
    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.normal(size=(d, t)))
    cases = {
        w: (
            np.ascontiguousarray(rng.normal(size=(n_filters, d, w))),
            rng.normal(size=n_filters),
        )
        for w in windows
    }
    douts = {w: rng.normal(size=(n_filters, t - w + 1)) for w in windows}
    results = {}
    for impl_name, impl in IMPLS.items():

        def forward():
            for w, (filters, bias) in cases.items():
                fmap = impl.conv_forward(x, filters, bias)
                max_pool_over_time(fmap)

        def backward():
            for w, (filters, _) in cases.items():
                impl.conv_backward(douts[w], x, filters)

        results[impl_name] = (best_of(forward, repeats), best_of(backward, repeats))

    line = f"{name:<34}"
    for impl_name in ("python", "c"):
        if impl_name in results:
            fwd, bwd = results[impl_name]
            line += f"  {impl_name}: fwd {fwd * 1e3:8.2f} ms  bwd {bwd * 1e3:8.2f} ms"
    if len(results) == 2:
        speed_f = results["python"][0] / results["c"][0]
        speed_b = results["python"][1] / results["c"][1]
        line += f"  speedup: fwd {speed_f:5.1f}x bwd {speed_b:5.1f}x"
    print(line)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend at import: {backend_name()}")
    if "c" not in IMPLS:
        print("compiled extension not built; benchmarking the python backend only")
    print()
    bench_case("baseline 1200 maps w=3, d=60", 60, 20, 1200, (3,), args.repeats)
    bench_case("multi-window 4x300, d=60 (50-dim)", 60, 30, 300, (2, 3, 4, 5), args.repeats)
    bench_case("multi-window 4x300, d=470 (400-dim)", 470, 30, 300, (2, 3, 4, 5), args.repeats)
    bench_case("long sentence, d=60, T=80", 60, 80, 300, (2, 3, 4, 5), args.repeats)


if __name__ == "__main__":
    main()
