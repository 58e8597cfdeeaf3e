"""Hinge-loss comparison of all five optimizers on LIBSVM datasets.

Reads datasets from --data-dir (default $FTRLM_DATA_DIR), tunes each
algorithm over its grid, writes one CSV per dataset and checks that the
tuned AdaFTRL-M final objective is within 5% of the best competitor.
Exits 1 if that check fails on any dataset.

    python scripts/fetch_libsvm.py --data-dir DIR
    python scripts/real_data_comparison.py --data-dir DIR --out-dir results/
"""

import argparse
import os
import sys
from pathlib import Path

from ftrlm.harness import ALGORITHMS, ExperimentConfig, emit_csv, grid_select, mean_series, run_experiment

PLAIN_GRID = [10.0**k for k in range(-8, -1)]
ADAPTIVE_GRID = [10.0**k for k in range(-3, 4)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", default=os.environ.get("FTRLM_DATA_DIR"))
    parser.add_argument("--datasets", nargs="+", default=["real-sim", "w8a"])
    parser.add_argument("--epochs", type=int, default=50)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--tolerance", type=float, default=1.05)
    args = parser.parse_args(argv)
    if not args.data_dir:
        parser.error("pass --data-dir or set FTRLM_DATA_DIR")

    grids = {a: (ADAPTIVE_GRID if a in ("AdaGrad", "AdaFTRL-M") else PLAIN_GRID) for a in ALGORITHMS}
    failed = []
    for name in args.datasets:
        cfg = ExperimentConfig(algorithms=list(ALGORITHMS), grids=grids, epochs=args.epochs,
                               seeds=list(range(args.seeds)), loss="hinge",
                               data_path=str(Path(args.data_dir) / name))
        records = run_experiment(cfg, threads=args.threads)
        emit_csv(records, Path(args.out_dir) / f"{name}.csv")
        means = mean_series(records)
        finals = {algo: means[(algo, c)][-1] for algo, c in grid_select(records).items()}
        rival = min(v for a, v in finals.items() if a != "AdaFTRL-M")
        ok = finals["AdaFTRL-M"] <= args.tolerance * rival
        failed += [] if ok else [name]
        summary = ", ".join(f"{a} {v:.4g}" for a, v in sorted(finals.items()))
        print(f"{name}: {'ok' if ok else 'FAIL'} ({summary})")
    print("all datasets within tolerance" if not failed else f"outside tolerance: {', '.join(failed)}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
