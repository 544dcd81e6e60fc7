"""Timing comparison of the two eigensolve backends.

Runs the batched Hermitian and pencil eigensolves over point counts that
bracket the solver's working sizes (a 16^4 torus grid is 65536 points) and
prints the per-call best times plus the compiled speedup.  Usage:

    python3 benchmarks/bench_kernels.py [--points 4096 65536] [--repeats 5]
"""

import argparse
import time

import numpy as np

from ma_lab import kernels


def _random_hermitian(rng, count, n, shift):
    a = rng.normal(size=(count, n, n)) + 1j * rng.normal(size=(count, n, n))
    h = 0.5 * (a + np.conj(np.swapaxes(a, 1, 2)))
    h += shift * np.eye(n)
    return h


def _best(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, nargs="+", default=[4096, 65536])
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = ["numpy"]
    if kernels.BACKEND_NAME == "compiled":
        backends.append("compiled")
    else:
        print("compiled extension not importable; timing the fallback only")

    rng = np.random.default_rng(0)
    header = f"{'case':<26}" + "".join(f"{b:>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for count in args.points:
        for n in (2, 3):
            base = _random_hermitian(rng, count, n, 4.0 * n)
            omega = _random_hermitian(rng, count, n, 4.0 * n)
            cases = [
                (f"eigvalsh    P={count:<7} n={n}",
                 lambda b, m=omega: kernels.eigvalsh_batch(m, backend=b)),
                (f"pencil      P={count:<7} n={n}",
                 lambda b, c=base, m=omega: kernels.pencil_eigvalsh_batch(
                     m, c, backend=b)),
            ]
            for label, call in cases:
                times = [_best(lambda b=b: call(b), args.repeats) for b in backends]
                row = f"{label:<26}" + "".join(f"{t * 1e3:>12.2f}ms" for t in times)
                if len(times) == 2:
                    row += f"{times[0] / times[1]:>9.1f}x"
                print(row)


if __name__ == "__main__":
    main()
