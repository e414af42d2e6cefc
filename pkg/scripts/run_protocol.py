"""
Run the bias-sweep protocol and print the headline numbers.

    python3 scripts/run_protocol.py --config configs/default.ini --out results/default
"""

import argparse
import logging
import time
from pathlib import Path

from dvlgp.config import ExperimentConfig, load_config
from dvlgp.pipeline import run_sweep, with_output, with_seed
from dvlgp.report import TABLE_COLUMNS, VELOCITY_RMSE_COLUMNS, read_records


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", type=Path)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = with_output(with_seed(cfg, args.seed), args.out)
    out = Path(cfg.output.dir)
    start = time.perf_counter()
    run_sweep(cfg, out)
    print(f"sweep finished in {time.perf_counter() - start:.0f} s -> {out}")

    print("\nvelocity RMSE (3-D error norm, m/s)")
    print(f"{'bias':>8} {'LS':>9} {'MOGPR':>9} {'gain %':>8}")
    for r in read_records(out / "report" / "velocity_rmse.csv", VELOCITY_RMSE_COLUMNS):
        print(f"{float(r['bias']):8.3f} {float(r['rmse_ls']):9.4f} {float(r['rmse_mogpr']):9.4f} "
              f"{float(r['improvement_pct']):8.1f}")

    print("\nfusion RMSE (velocity m/s, angles deg)")
    print(f"{'mission':>8} {'bias':>6} {'method':>6} {'vn':>7} {'ve':>7} {'vd':>7} {'roll':>6} {'pitch':>6} {'yaw':>6}")
    for r in read_records(out / "report" / "rmse_table.csv", TABLE_COLUMNS):
        print(f"{r['trajectory']:>8} {float(r['bias']):6.3f} {r['method']:>6} "
              + " ".join(f"{float(r[c]):7.4f}" for c in ("vn", "ve", "vd"))
              + " " + " ".join(f"{float(r[c]):6.3f}" for c in ("roll", "pitch", "yaw")))


if __name__ == "__main__":
    main()
