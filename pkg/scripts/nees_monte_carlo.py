"""
Filter consistency check: NEES over zero-bias Monte Carlo runs.

    python3 scripts/nees_monte_carlo.py --runs 25
"""

import argparse
import time

import numpy as np

from dvlgp.config import ExperimentConfig, load_config
from dvlgp.consistency import chi2_band, monte_carlo_nees


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config")
    ap.add_argument("--runs", type=int, default=25)
    ap.add_argument("--duration", type=float, default=600.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    start = time.perf_counter()
    means, min_eig = monte_carlo_nees(cfg, args.runs, args.duration, args.seed, check_health=True)
    lo, hi = chi2_band(args.runs)
    np.set_printoptions(precision=2, suppress=True)
    print(f"{args.runs} runs of {args.duration:g} s in {time.perf_counter() - start:.0f} s")
    print("per-run mean NEES:", means)
    print(f"mean NEES {means.mean():.2f} (state dimension 12)")
    print(f"95% chi-square band for the run average: [{lo:.2f}, {hi:.2f}]; with 10% margin [{0.9 * lo:.2f}, {1.1 * hi:.2f}]")
    print(f"smallest eigenvalue of P in any run: {min_eig:.3e}")


if __name__ == "__main__":
    main()
