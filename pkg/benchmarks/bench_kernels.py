"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--points 200000] [--repeat 3]

Reports the best-of-``repeat`` wall time for each backend and checks that
both give the same numbers.
"""

import argparse
import time

import numpy as np

from mixpce import kernels
from mixpce.gmm import random_mixture, rng_from_seed
from mixpce.indexing import enumerate_indices, split
from mixpce.moments import ComponentMoments, gaussian_moments


def best_time(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_monomials(backend, points, exps, repeat):
    return best_time(lambda: backend.monomial_matrix(points, exps), repeat)


def bench_contractions(backend, pairs, repeat):
    gm = gaussian_moments(16)

    def run():
        return np.array([backend.pair_expectation(l.head, l.cores, r.head, r.cores, gm)
                         for l, r in pairs])

    return best_time(run, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = rng_from_seed(0)
    mix = random_mixture(8, 3, rng)
    idx = enumerate_indices(8, 3)
    points = mix.sample(args.points, 1)
    exps = idx.as_array()
    engine = ComponentMoments(mix.components[0])
    six = [a for a in enumerate_indices(8, 6) if sum(a) == 6][:200]
    pairs = []
    for a in six:
        lo, hi = split(a)
        pairs.append((engine.train(lo), engine.train(hi)))

    print(f"backends available: {sorted(kernels.BACKENDS)} (active: {kernels.BACKEND})")
    results = {}
    for name, backend in sorted(kernels.BACKENDS.items()):
        tm, B = bench_monomials(backend, points, exps, args.repeat)
        tc, E = bench_contractions(backend, pairs, args.repeat)
        results[name] = (B, E)
        print(f"{name:>7}: monomial_matrix {args.points}x{idx.n}: {tm * 1e3:8.1f} ms   "
              f"pair_expectation x{len(pairs)}: {tc * 1e3:8.1f} ms")
    if len(results) == 2:
        (B0, E0), (B1, E1) = results.values()
        print(f"max |diff| monomials {np.max(np.abs(B0 - B1)):.2e}, "
              f"contractions {np.max(np.abs(E0 - E1)):.2e}")


if __name__ == "__main__":
    main()
