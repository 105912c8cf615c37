"""Numba vs numpy timings for the subspace kernels.

    python3 benchmarks/bench_kernels.py [--n 16] [--k 8] [--repeat 5]

Each pair is checked for identical output before it is timed; the numba
column excludes compilation (one warm-up call).
"""
import argparse
import math
import time

import numpy as np

from hwqaoa import kernels
from hwqaoa._accel import HAS_NUMBA
from hwqaoa.graphs import generate_erdos_renyi
from hwqaoa.operators import MixerKind, mixer_pairs


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=16)
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAS_NUMBA:
        raise SystemExit("numba unavailable (or HWQAOA_DISABLE_NUMBA set); nothing to compare")

    n, k = args.n, args.k
    dim = math.comb(n, k)
    binom = kernels.binomial_table(n)
    states = kernels.weight_k_states_numpy(n, k, dim)
    eu, ev = generate_erdos_renyi(n, 0.5, 0).edge_arrays()
    pairs = np.asarray(mixer_pairs(MixerKind.RING, n), dtype=np.int64)
    pi, pj = pairs[:, 0].copy(), pairs[:, 1].copy()

    cases = {
        "weight_k_states": (kernels.weight_k_states_numpy, kernels.weight_k_states_numba,
                            (n, k, dim)),
        "rank_states": (kernels.rank_states_numpy, kernels.rank_states_numba,
                        (states, n, binom)),
        "cost_values": (kernels.cost_values_numpy, kernels.cost_values_numba,
                        (states, eu, ev, kernels.KIND_AND)),
    }
    if dim <= 5000:
        cases["hop_matrix(ring)"] = (kernels.hop_matrix_numpy, kernels.hop_matrix_numba,
                                     (states, pi, pj, n, binom))

    print(f"n={n} k={k} dim={dim}  best of {args.repeat}")
    print(f"{'kernel':<18} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8}")
    for name, (f_np, f_nb, fargs) in cases.items():
        a, b = f_np(*fargs), f_nb(*fargs)
        if not np.array_equal(a, b):
            raise SystemExit(f"{name}: numba and numpy results differ")
        t_np = best_of(lambda: f_np(*fargs), args.repeat)
        t_nb = best_of(lambda: f_nb(*fargs), args.repeat)
        print(f"{name:<18} {1e3 * t_np:>11.3f} {1e3 * t_nb:>11.3f} {t_np / t_nb:>8.1f}")


if __name__ == "__main__":
    main()
