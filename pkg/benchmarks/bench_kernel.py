"""Time the compiled swarm kernel against the pure-Python fallback.

    python benchmarks/bench_kernel.py [--repeats N]

Both kernels run the same ranging swarm on the same draws; the script checks
that their results are bit-identical before reporting timings.
"""
import argparse
import time

import numpy as np

from adapsca import _kernel_py
from adapsca.swarm import ADAPTIVE, SwarmParams, schedules

try:
    from adapsca import _kernel
except ImportError:
    _kernel = None


def problem(seed: int, p: SwarmParams, n_refs: int = 6):
    rng = np.random.default_rng(seed)
    ref = rng.uniform(0, 100, (n_refs, 2))
    truth = rng.uniform(20, 80, 2)
    dists = np.linalg.norm(ref - truth, axis=1)
    weights = rng.choice([0.8, 0.2], n_refs)
    pos = rng.uniform(0, 100, (p.n_particles, 2))
    vel = rng.uniform(-1, 1, (p.n_particles, 2))
    draws = rng.random((p.max_iters, p.n_particles, 4))
    return ref, dists, weights, pos, vel, draws


def run(kernel, args, p):
    ref, dists, weights, pos, vel, draws = args
    prob, omega, amp = schedules(p, ADAPTIVE)
    lo, hi = np.zeros(2), np.full(2, 100.0)
    return kernel.run_swarm_ranging(ref, dists, weights, pos.copy(), vel.copy(), draws, prob,
                                    omega, amp, p.c1, p.c2, p.comm_range, lo, hi)


def bench(kernel, cases, p, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for c in cases:
            run(kernel, c, p)
        best = min(best, time.perf_counter() - t0)
    return best / len(cases)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--swarms", type=int, default=50)
    args = ap.parse_args()
    p = SwarmParams()
    cases = [problem(s, p) for s in range(args.swarms)]
    kernels = [_kernel_py] + ([_kernel] if _kernel is not None else [])
    if _kernel is not None:
        for c in cases:
            a, b = run(_kernel_py, c, p), run(_kernel, c, p)
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[2], b[2]), "kernels disagree"
    times = {k.NAME: bench(k, cases, p, args.repeats) for k in kernels}
    print(f"{args.swarms} swarms, {p.n_particles} particles x {p.max_iters} iterations")
    for name, t in times.items():
        print(f"{name:>8}: {t * 1e3:8.3f} ms per swarm")
    if len(times) == 2:
        print(f" speedup: {times['python'] / times['cython']:.1f}x (results bit-identical)")
    else:
        print("compiled kernel not built; only the fallback was timed")


if __name__ == "__main__":
    main()
