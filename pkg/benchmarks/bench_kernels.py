"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--points 200000] [--mats 20000] [--repeat 5]
"""
import argparse
import time

import numpy as np

from tubenv._kernels import implementation, jacobi_eigenvalues, poly_eval


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--mats", type=int, default=20_000)
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    exps = rng.integers(0, 4, size=(30, 2 * args.dim))
    coeffs = rng.normal(size=30)
    pts = rng.uniform(-1, 1, size=(args.points, 2 * args.dim))
    a = rng.normal(size=(args.mats, args.dim, args.dim))
    mats = a + np.swapaxes(a, 1, 2)

    backends = {name: implementation(name) for name in ("numpy", "numba")}
    for impl in backends.values():  # compile outside the timed region
        poly_eval(exps, coeffs, pts[:8], impl=impl)
        jacobi_eigenvalues(mats[:2], impl=impl)

    ref_p = poly_eval(exps, coeffs, pts, impl=backends["numpy"])
    ref_j = jacobi_eigenvalues(mats, impl=backends["numpy"])
    print(f"{'kernel':<12}{'backend':<8}{'seconds':>10}{'speedup':>9}{'max |diff|':>12}")
    for label, call, ref in (
        ("poly_eval", lambda impl: poly_eval(exps, coeffs, pts, impl=impl), ref_p),
        ("jacobi", lambda impl: jacobi_eigenvalues(mats, impl=impl), ref_j),
    ):
        base = None
        for name, impl in backends.items():
            t = best_of(lambda: call(impl), args.repeat)
            base = base or t
            diff = float(np.max(np.abs(call(impl) - ref)))
            print(f"{label:<12}{name:<8}{t:>10.4f}{base / t:>8.1f}x{diff:>12.2e}")


if __name__ == "__main__":
    main()
