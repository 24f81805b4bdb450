"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from gpbundle import _kernels_py as py
from gpbundle.engine import _fast_oracle
from gpbundle.problem import make_benchmark
from gpbundle.verify import random_h

try:
    from gpbundle import _kernels as cy
except ImportError:
    cy = None


def cases():
    rng = np.random.default_rng(0)
    n, m = 2, 8
    hp = random_h(rng, n, 2).packed(n)
    z, xc = rng.normal(size=n), rng.uniform(-0.3, 0.3, n)
    s1, s2 = rng.normal(size=n), rng.normal(size=n)
    G, b = 2 * rng.normal(size=(m, n)), rng.normal(size=m)
    lam = 0.7
    step0 = 1.0 / (lam * np.linalg.norm(G - G.mean(axis=0), 2) ** 2)
    w0 = np.full(m, 1.0 / m)
    inst = make_benchmark("maxaffine", 2, 0)
    okind, oA, ob, fcall = _fast_oracle(inst.f)
    ihp = inst.h.packed(inst.n)
    target = inst.reference.phi_star + 1e-3
    return {
        "prox": (lambda k: k.prox(z, 0.3, hp), 1000),
        "one_cut": (lambda k: k.one_cut(s1, 0.1, xc, lam, hp), 1000),
        "two_cut": (lambda k: k.two_cut(s1, 0.1, s2, -0.2, xc, lam, hp, 200), 200),
        "multi_cut": (lambda k: k.multi_cut(G, b, xc, lam, hp, w0.copy(), step0, 1e-10, 500), 20),
        "e1_loop": (lambda k: k.e1_loop(okind, oA, ob, fcall, ihp, inst.x0, 0.5, 1e-3, 0.95, 100000, target, 0,
                                        60), 3),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if cy is None:
        print("compiled kernels not built; only the Python timings are shown")
    print(f"{'kernel':<10} {'python us':>12} {'cython us':>12} {'speedup':>9}")
    for name, (fn, number) in cases().items():
        t_py = min(timeit.repeat(lambda: fn(py), number=number, repeat=args.repeat)) / number * 1e6
        if cy is None:
            print(f"{name:<10} {t_py:12.2f} {'-':>12} {'-':>9}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=number, repeat=args.repeat)) / number * 1e6
        print(f"{name:<10} {t_py:12.2f} {t_cy:12.2f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
