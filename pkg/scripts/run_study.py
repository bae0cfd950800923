"""Run a bundled study config and write <out>.csv / <out>.json.

Example: python scripts/run_study.py configs/2d.cfg --seeds 20
With --seeds N the study is repeated over master seeds 0..N-1 and the share of
seeds where MLGP has the strictly lowest mean RMSE is printed.
"""
import argparse
import os
from pathlib import Path

from mlgp.bench import BenchConfig, run_study
from mlgp.cli import read_config


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--seeds", type=int, default=1)
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    base = read_config(args.config)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    wins = 0
    for seed in range(base.get("seed", 0), base.get("seed", 0) + args.seeds):
        res = run_study(BenchConfig(**{**base, "seed": seed}), threads=args.threads)
        with open(out / f"{stem}_seed{seed}.csv", "w", newline="") as f:
            res.write_csv(f)
        with open(out / f"{stem}_seed{seed}.json", "w") as f:
            res.write_json(f)
        mean = res.mean_rmse
        best = min(mean, key=mean.get)
        wins += best == "mlgp" and sum(v == mean["mlgp"] for v in mean.values()) == 1
        print(f"seed {seed}: " + "  ".join(f"{m} {v:.6g}" for m, v in mean.items()) + f"  best {best}")
    if args.seeds > 1:
        print(f"MLGP strictly best in {wins}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
