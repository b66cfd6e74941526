"""Compare the compiled and NumPy batched solvers.

Run with ``python benchmarks/bench_kernels.py``.  The default sizes match
one Doppler refinement level at the fig2a preset: a few thousand
velocity nodes, each a small complex linear system with four right-hand
sides.
"""
import argparse
import time

import numpy as np

from mirrorless import kernels


def make_batch(n, m, r, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, m, m)) + 1j * rng.normal(size=(n, m, m))
    a += 3 * np.eye(m)
    b = rng.normal(size=(n, m, r)) + 1j * rng.normal(size=(n, m, r))
    return a, b


def best_of(fn, a, b, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(a, b)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[257, 2049, 16385])
    p.add_argument("--dim", type=int, default=9)
    p.add_argument("--rhs", type=int, default=4)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    backends = [("python", kernels.python_solve_batched)]
    if kernels.compiled_solve_batched is not None:
        backends.append(("compiled", kernels.compiled_solve_batched))
    else:
        print("compiled extension not built; timing the NumPy fallback only")

    print(f"{'nodes':>7} " + " ".join(f"{name:>12}" for name, _ in backends) + "   speedup")
    for n in args.sizes:
        a, b = make_batch(n, args.dim, args.rhs)
        times = [best_of(fn, a, b, args.repeat) for _, fn in backends]
        if len(backends) == 2:
            x_py, x_c = (fn(a, b) for _, fn in backends)
            assert np.allclose(x_py, x_c, rtol=1e-10, atol=1e-12)
        speed = f"{times[0] / times[-1]:8.2f}x" if len(times) == 2 else ""
        print(f"{n:>7} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + "  " + speed)


if __name__ == "__main__":
    main()
