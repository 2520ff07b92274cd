"""Run the default pipeline over several generator seeds and tabulate gain and iterations."""
import argparse
import dataclasses
import sys

from softdd.cli import RunConfig
from softdd.experiment import run_pipeline


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--seeds", default="0,1,2,3,4,5,6,7")
    p.add_argument("--rate", type=float, default=RunConfig.rate)
    p.add_argument("--n-dev", type=int, default=RunConfig.n_dev)
    args = p.parse_args(argv)
    print("seed\tbase_f1\tsoft_f1\tgain\tmean_iters\tconverged_pct\tkept")
    for seed in (int(s) for s in args.seeds.split(",")):
        cfg = dataclasses.replace(RunConfig(), seed=seed, rate=args.rate, n_dev=args.n_dev)
        r = run_pipeline(cfg)
        print(f"{seed}\t{100 * r.base_f1:.2f}\t{100 * r.soft_f1:.2f}\t{100 * (r.soft_f1 - r.base_f1):+.2f}"
              f"\t{r.mean_iterations:.2f}\t{r.converged_pct:.1f}\t{len(r.pruned)}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
