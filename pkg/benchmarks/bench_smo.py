"""Compare the compiled and pure solver backends on identical problems.

Run with:  python3 benchmarks/bench_smo.py [--sizes 20,40,80] [--repeats 3]

Both backends execute the same scalar arithmetic in the same order, so
besides timing, this asserts their outputs match bit for bit.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from emg_affect._smo import active_backend, solve_pure
from emg_affect.svm import rbf_kernel

try:
    from emg_affect._smo import _smo_cy
except ImportError:
    _smo_cy = None


def make_instance(n: int, seed: int):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 8))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    K = rbf_kernel(X, X, gamma=0.125)
    return np.ascontiguousarray(K), np.ascontiguousarray(y)


def time_solver(solver, K, y, repeats: int) -> tuple[float, tuple]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        started = time.perf_counter()
        result = solver(K, y, 1.0, 1e-3, 200, 7)
        best = min(best, time.perf_counter() - started)
    return best, result


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="20,40,80,160")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"active backend: {active_backend()}")
    if _smo_cy is None:
        print("compiled backend unavailable; timing the pure solver only")

    print(f"{'n':>6} {'pure (ms)':>12} {'compiled (ms)':>14} {'speedup':>9}  parity")
    for n in sizes:
        K, y = make_instance(n, seed=n)
        pure_s, pure_result = time_solver(solve_pure, K, y, args.repeats)
        if _smo_cy is None:
            print(f"{n:>6} {pure_s * 1e3:>12.2f} {'-':>14} {'-':>9}  -")
            continue
        cy_s, cy_result = time_solver(_smo_cy.smo_solve, K, y, args.repeats)
        identical = (
            list(map(float, pure_result[0])) == list(map(float, cy_result[0]))
            and float(pure_result[1]) == float(cy_result[1])
            and pure_result[2:4] == cy_result[2:4]
        )
        assert identical, f"backend outputs diverged at n={n}"
        print(
            f"{n:>6} {pure_s * 1e3:>12.2f} {cy_s * 1e3:>14.2f} "
            f"{pure_s / cy_s:>8.1f}x  bit-identical"
        )


if __name__ == "__main__":
    main()
