"""Time the compiled and numpy kernel backends on one scenario-sized step.

Usage: python3 benchmarks/bench_kernels.py [--agents N] [--degree R] [--depth D]
"""
import argparse
import time

import numpy as np

from colme import kernels
from colme.algorithms import directed_edges
from colme.graph import generate_random_regular


def _time(fn, repeat):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, r, depth, repeat):
    rng = np.random.default_rng(0)
    g = generate_random_regular(n, r, rng)
    m = len(g.eu)
    xbar, sig, kap = rng.normal(1, 0.1, n), rng.uniform(1, 2, n), rng.normal(3, 0.3, n)
    hw = sig * 0.05
    src, dst, rev = directed_edges(g)
    alive = np.ones(2 * m, dtype=np.uint8)
    recv_w = rng.uniform(0.5, 1.0, 2 * m)
    msg = rng.normal(size=(2 * m, depth, 2))
    sums = rng.normal(size=n)
    ew = rng.uniform(0, 1, m)

    rows = []
    for name, K in kernels.BACKENDS.items():
        rows.append((name, {
            "check_edges": _time(lambda: K.check_edges(
                g.eu, g.ev, xbar, sig, kap, hw, 0.2, True, True, True), repeat),
            "bcolme_exchange": _time(lambda: K.bcolme_exchange(
                src, dst, rev, alive, recv_w, msg, sums, 100.0, depth), repeat),
            "consensus_step": _time(lambda: K.consensus_step(
                g.eu, g.ev, ew, xbar, sig, 0.5), repeat),
        }))
    return rows


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--agents", type=int, default=1000)
    p.add_argument("--degree", type=int, default=10)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--repeat", type=int, default=50)
    p.add_argument("--scenario", help="also time one realization of this preset per backend")
    a = p.parse_args()
    rows = bench(a.agents, a.degree, a.depth, a.repeat)
    print(f"agents={a.agents} degree={a.degree} depth={a.depth} (best of {a.repeat}, microseconds)")
    names = list(rows[0][1])
    print(f"{'backend':10s}" + "".join(f"{k:>18s}" for k in names))
    for backend, res in rows:
        print(f"{backend:10s}" + "".join(f"{res[k] * 1e6:18.1f}" for k in names))
    if len(rows) == 2:
        base = dict(rows)["python"]
        fast = dict(rows)["compiled"]
        print(f"{'speedup':10s}" + "".join(f"{base[k] / fast[k]:17.1f}x" for k in names))
    if a.scenario:
        from colme.config import get_preset
        from colme.harness import run_realization

        cfg = get_preset(a.scenario).with_overrides(n_agents=a.agents)
        for backend in kernels.BACKENDS:
            t0 = time.perf_counter()
            run_realization(cfg, 0, backend)
            print(f"{a.scenario} one realization, {backend}: {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
