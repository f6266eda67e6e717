"""Head-to-head timing of the two greedy assignment kernels.

Runs the compiled extension and the pure Python reference on identical
channel-derived weight matrices, checks that the partitions agree, and
prints median per-call times.  Usage:

    python benchmarks/bench_grouping.py [--m 256] [--q 16] [--repeats 20]
"""

import argparse
import statistics
import time

import numpy as np

from risce import _greedy_ref
from risce.channel import (
    Geometry,
    LinearArraySpec,
    PlanarArraySpec,
    gen_ris_bs_channel,
)
from risce.grouping import correlation_weights, seed_init

try:
    from risce import _greedy_cy
except ImportError:
    _greedy_cy = None


def weight_matrices(m, draws, seed):
    rows = 2 ** ((m.bit_length() - 1) // 2)
    if rows * (m // rows) != m:
        raise SystemExit("--m must be a power of two")
    geo = Geometry(bs_array=LinearArraySpec(16),
                   ris_array=PlanarArraySpec(rows, m // rows))
    rng = np.random.default_rng(seed)
    return [correlation_weights(gen_ris_bs_channel(geo, 16, rng)[0])
            for _ in range(draws)]


def time_kernel(kernel, mats, seeds, q, cap, repeats):
    per_call = []
    res = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = [kernel(W, list(s), q, cap) for W, s in zip(mats, seeds)]
        per_call.append((time.perf_counter() - t0) / len(mats))
    return res, statistics.median(per_call)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=256)
    ap.add_argument("--q", type=int, default=16)
    ap.add_argument("--draws", type=int, default=8)
    ap.add_argument("--repeats", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cap = args.m // args.q

    mats = weight_matrices(args.m, args.draws, args.seed)
    seeds = [seed_init(W, args.q) for W in mats]

    ref_res, ref_t = time_kernel(_greedy_ref.greedy_assign_kernel,
                                 mats, seeds, args.q, cap, args.repeats)
    print(f"m={args.m} q={args.q}: python reference {ref_t * 1e3:8.3f} ms/call")
    if _greedy_cy is None:
        print("compiled extension not built; nothing to compare")
        return
    cy_res, cy_t = time_kernel(_greedy_cy.greedy_assign_kernel,
                               mats, seeds, args.q, cap, args.repeats)
    print(f"m={args.m} q={args.q}: compiled kernel  {cy_t * 1e3:8.3f} ms/call")
    agree = all(np.array_equal(a, b) for a, b in zip(ref_res, cy_res))
    print(f"partitions agree: {agree}; speedup {ref_t / cy_t:.1f}x")


if __name__ == "__main__":
    main()
