"""Compare hard/soft dual decomposition with exhaustive search on random small instances."""
import argparse
import sys
import time

import numpy as np

from softdd.inference import hard_dd, soft_dd
from softdd.oracle import brute_force_map, random_instance


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--step0", type=float, default=1.0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    stats = {"soft_conv": 0, "hard_conv": 0, "soft_bad": 0, "hard_bad": 0, "dual_bad": 0}
    iters = []
    t0 = time.perf_counter()
    for _ in range(args.n):
        scores, cset = random_instance(rng)
        soft = soft_dd(scores, cset, args.max_iters, args.step0)
        hard = hard_dd(scores, cset, args.max_iters, args.step0)
        _, s_opt = brute_force_map(scores, cset, "soft")
        _, h_opt = brute_force_map(scores, cset, "hard")
        iters.append(soft.iterations)
        if soft.converged:
            stats["soft_conv"] += 1
            stats["soft_bad"] += abs(soft.primal - s_opt) > 1e-9
        if hard.converged:
            stats["hard_conv"] += 1
            stats["hard_bad"] += abs(hard.score - h_opt) > 1e-9
        stats["dual_bad"] += (soft.dual < s_opt - 1e-9) + (hard.dual < h_opt - 1e-9)
    for k, v in stats.items():
        print(f"{k}\t{v}")
    print(f"soft_mean_iterations\t{np.mean(iters):.3f}")
    print(f"instances\t{args.n}\tseconds\t{time.perf_counter() - t0:.1f}")
    return int(stats["soft_bad"] or stats["hard_bad"] or stats["dual_bad"])


if __name__ == "__main__":
    sys.exit(main())
