"""Mean RMSE per method over a range of budgets, as plot-ready CSV."""
import argparse
import os

import numpy as np

from mlgp.bench import BenchConfig, budget_sweep, write_sweep_csv
from mlgp.cli import read_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--budgets", default="", help="comma-separated; default spans 0.5x..2x the config budget")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out", default="results/budget_sweep.csv")
    args = ap.parse_args()
    cfg = BenchConfig(**read_config(args.config))
    budgets = ([float(b) for b in args.budgets.split(",")] if args.budgets
               else list(np.round(np.linspace(0.5, 2.0, 7) * cfg.budget)))
    rows = budget_sweep(cfg, budgets, threads=args.threads)
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="") as f:
        write_sweep_csv(rows, f)
    for b, m, v in rows:
        print(f"{b:10.6g}  {m:10s} {v:.6g}")


if __name__ == "__main__":
    main()
