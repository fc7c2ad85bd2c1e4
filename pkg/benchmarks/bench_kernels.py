"""Time the compiled and pure-Python kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 500] [--iters 20000] [--repeat 3]

Both backends receive identical arrays and pre-drawn random numbers, so the
script also checks that they return identical results.
"""

import argparse
import time

import numpy as np

from qtabu import kernels
from qtabu.qubo import Qubo, move_values


def random_problem(n: int, seed: int) -> Qubo:
    rng = np.random.default_rng(seed)
    q = np.triu(rng.integers(-100, 101, size=(n, n)).astype(np.float64))
    return Qubo(q * np.triu((rng.random((n, n)) < 0.1) | np.eye(n, dtype=bool)))


def tabu_args(q: Qubo, iters: int, seed: int):
    x = np.zeros(q.n, dtype=np.uint8)
    draws = np.random.default_rng(seed).integers(0, 3, iters)
    return [q.couplings, x, move_values(q, x), np.zeros(q.n, dtype=np.int64), 0.0, 0.0, x.copy(),
            5, draws, iters, -np.inf, 0, np.empty(iters), np.empty(iters), np.empty(iters, dtype=np.int64)]


def best_time(fn, repeat: int) -> tuple[float, object]:
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--sa-k", type=int, default=20)
    ap.add_argument("--sa-restarts", type=int, default=1000)
    ap.add_argument("--sa-steps", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()

    backends = {"python": kernels.get_backend("python")}
    try:
        backends["cython"] = kernels.get_backend("cython")
    except ImportError:
        print("compiled kernels not built; timing the Python backend only")

    q = random_problem(a.n, 0)
    sa_q = random_problem(a.sa_k, 1)
    rng = np.random.default_rng(2)
    starts = rng.integers(0, 2, (a.sa_restarts, a.sa_k), dtype=np.uint8)
    uniforms = rng.random((a.sa_restarts, a.sa_steps))

    print(f"{'kernel':<28}{'backend':<10}{'seconds':>10}")
    results = {}
    for name, impl in backends.items():
        t_tabu, r_tabu = best_time(lambda: impl.tabu_run(*tabu_args(q, a.iters, 0)), a.repeat)
        t_sa, r_sa = best_time(
            lambda: impl.sa_run(sa_q.couplings, sa_q.linear, sa_q.offset, starts, uniforms, 17.5), a.repeat)
        results[name] = (r_tabu, r_sa)
        print(f"{f'tabu_run n={a.n} x{a.iters}':<28}{name:<10}{t_tabu:>10.4f}")
        print(f"{f'sa_run k={a.sa_k} x{a.sa_restarts}':<28}{name:<10}{t_sa:>10.4f}")
        results[name] += (t_tabu, t_sa)

    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        same = py[0] == cy[0] and np.array_equal(py[1][0], cy[1][0]) and np.array_equal(py[1][1], cy[1][1])
        print(f"speedup tabu_run {py[2] / cy[2]:.1f}x, sa_run {py[3] / cy[3]:.1f}x; identical results: {same}")


if __name__ == "__main__":
    main()
