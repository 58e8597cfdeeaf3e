"""Command line entry point: ``run``, ``lowerbound`` and ``slopes``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import List, Optional

from .errors import ConfigurationError, ParseError, SlopeUndefinedError
from .harness import (ExperimentConfig, emit_csv, grid_select, lowerbound_sweep, read_csv, run_experiment,
                      slope_fit, write_lowerbound_csv)

DEFAULT_BETAS = (0.0, 0.5, 0.9)
DEFAULT_ALPHAS = (0.0, 0.25, 0.5)
DEFAULT_TS = (100, 1000, 10000)


def _cmd_run(args) -> int:
    if args.data_dir:
        os.environ["FTRLM_DATA_DIR"] = args.data_dir
    cfg = ExperimentConfig.from_file(args.config)
    out = args.out or cfg.output
    if not out:
        raise ConfigurationError("no output path: pass --out or set output in the config")
    records = run_experiment(cfg, threads=args.threads)
    emit_csv(records, out)
    for algo, c in grid_select(records).items():
        print(f"{algo}: best stepsize {c:g}")
    return 0


def _cmd_lowerbound(args) -> int:
    if args.grid:
        betas, alphas, Ts = DEFAULT_BETAS, DEFAULT_ALPHAS, DEFAULT_TS
    else:
        if args.T is None or args.beta is None or args.alpha is None:
            raise ConfigurationError("--T, --beta and --alpha are required without --grid")
        betas, alphas, Ts = args.beta, args.alpha, args.T
    rows = lowerbound_sweep(betas, alphas, Ts, c=args.c, L=args.L)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_lowerbound_csv(rows, fh)
    else:
        write_lowerbound_csv(rows, sys.stdout)
    below = [r for r in rows if r["ratio"] < 1.0]
    for r in below:
        print(f"ratio {r['ratio']:.4f} < 1 at T={r['T']} beta={r['beta']} alpha={r['alpha']}", file=sys.stderr)
    return 1 if below else 0


def _cmd_slopes(args) -> int:
    status = 0
    for (algo, schedule, seed), series in sorted(read_csv(args.csv).items()):
        if args.mean_only and seed != "mean":
            continue
        try:
            slope = slope_fit(series[1:], window=args.window, f_star=args.f_star)
            print(f"{algo},{schedule},{seed},{slope:.6f}")
        except SlopeUndefinedError as exc:
            print(f"{algo},{schedule},{seed},undefined ({exc})")
            status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ftrlm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a grid x seeds experiment and write a CSV")
    run.add_argument("--config", required=True)
    run.add_argument("--out")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--data-dir", help="directory for relative dataset paths (else $FTRLM_DATA_DIR)")
    run.set_defaults(func=_cmd_run)

    lb = sub.add_parser("lowerbound", help="check SGDM against the adversarial construction")
    lb.add_argument("--T", type=int, nargs="+")
    lb.add_argument("--beta", type=float, nargs="+")
    lb.add_argument("--alpha", type=float, nargs="+")
    lb.add_argument("--c", type=float, default=1.0)
    lb.add_argument("--L", type=float, default=1.0)
    lb.add_argument("--grid", action="store_true", help="sweep beta, alpha in {0, .25, .5}, T in {1e2, 1e3, 1e4}")
    lb.add_argument("--out")
    lb.set_defaults(func=_cmd_lowerbound)

    sl = sub.add_parser("slopes", help="fit tail log-log slopes to a results CSV")
    sl.add_argument("--csv", required=True)
    sl.add_argument("--f-star", type=float, default=0.0)
    sl.add_argument("--window", type=float, default=0.5)
    sl.add_argument("--mean-only", action="store_true")
    sl.set_defaults(func=_cmd_slopes)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
