"""Time the compiled and numpy Memory-DD kernels on identical inputs.

    python benchmarks/bench_kernels.py --hidden 128 --T 24 --batch 32 --repeat 20
"""

import argparse
import json
import time

import numpy as np

from memdd import kernels


def bench(mod, args, inputs, repeat):
    X, W1, b, W, dH = inputs
    flags = (True, True, True, True)
    best_f = best_b = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        cache = mod.memdd_forward(X, W1, b, W, W, *flags)
        t1 = time.perf_counter()
        mod.memdd_backward(X, W1, W, W, *cache, dH, *flags)
        t2 = time.perf_counter()
        best_f = min(best_f, t1 - t0)
        best_b = min(best_b, t2 - t1)
    return best_f, best_b


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hidden", type=int, default=128)
    ap.add_argument("--dx", type=int, default=9)
    ap.add_argument("--T", type=int, default=24)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--json", action="store_true", help="print one JSON object instead of a table")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    h, x = args.hidden, args.dx
    inputs = (
        rng.uniform(-1, 1, (args.T, args.batch, x)),
        rng.uniform(-0.1, 0.1, (h, h + x)),
        np.zeros(h),
        rng.uniform(-0.1, 0.1, (h, h)),
        rng.uniform(-1, 1, (args.batch, h)),
    )
    results = {}
    for name, mod in sorted(kernels.available_backends().items()):
        f, b = bench(mod, args, inputs, args.repeat)
        results[name] = {"forward_ms": 1e3 * f, "backward_ms": 1e3 * b}
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        results["speedup"] = (py["forward_ms"] + py["backward_ms"]) / (cy["forward_ms"] + cy["backward_ms"])

    if args.json:
        print(json.dumps({"dims": vars(args), **results}))
        return
    print(f"d_h={h} d_x={x} T={args.T} batch={args.batch} (best of {args.repeat})")
    for name in ("python", "cython"):
        if name in results:
            r = results[name]
            print(f"  {name:<7} forward {r['forward_ms']:8.3f} ms   backward {r['backward_ms']:8.3f} ms")
    if "speedup" in results:
        print(f"  speedup (python / cython, fwd+bwd): {results['speedup']:.2f}x")
    else:
        print("  compiled extension not available; only the numpy backend was timed")


if __name__ == "__main__":
    main()
