"""Compare the compiled and numpy aggregation kernels on one squint round.

Run with ``python3 benchmarks/bench_kernels.py``. Prints microseconds per
``squint_step`` call for a few grid sizes, and the speedup.
"""

import argparse
import timeit

import numpy as np

from saboa import _kernels_py

try:
    from saboa import _kernels
except ImportError:
    _kernels = None


def setup(K, d, depth, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (K, d))
    pts /= np.abs(pts).sum(axis=1, keepdims=True)
    eta = np.exp(-np.arange(1, depth + 1)) / 10.0
    return dict(points=pts, grad=rng.normal(size=d), theta=np.zeros(d), eta=eta,
                log_prior=np.full(K, -np.log(K)), log_eta=np.log(eta),
                A=np.zeros((K, depth)), r=np.zeros(K), weights=np.zeros(K),
                theta_out=np.zeros(d))


def bench(mod, args, number):
    def call():
        mod.squint_step(**args)
    call()
    return min(timeit.repeat(call, number=number, repeat=5)) / number * 1e6


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--number", type=int, default=200)
    ns = p.parse_args()
    print(f"{'K':>6} {'d':>4} {'depth':>5} {'python us':>10} {'cython us':>10} {'speedup':>8}")
    for K, d, depth in [(10, 10, 12), (100, 50, 20), (232, 50, 26), (1000, 50, 26), (8321, 2, 13)]:
        py = bench(_kernels_py, setup(K, d, depth), ns.number)
        if _kernels is None:
            print(f"{K:>6} {d:>4} {depth:>5} {py:>10.1f} {'n/a':>10} {'n/a':>8}")
            continue
        cy = bench(_kernels, setup(K, d, depth), ns.number)
        print(f"{K:>6} {d:>4} {depth:>5} {py:>10.1f} {cy:>10.1f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
