#!/usr/bin/env python3
"""Run every ``experiment = ...`` config under configs/ through the CLI.

Usage: ``python3 scripts/run_experiments.py [--out runs] [name ...]`` where
each name is a config stem such as ``splitting``.
"""

import argparse
import sys
from pathlib import Path

from alp import cli

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs")
    ap.add_argument("names", nargs="*")
    args = ap.parse_args(argv)
    cfgs = sorted(p for p in (ROOT / "configs").glob("*.cfg") if "experiment" in p.read_text())
    if args.names:
        cfgs = [p for p in cfgs if p.stem in args.names]
    worst = 0
    for p in cfgs:
        status = cli.main(["experiment", "--config", str(p), "--out", args.out])
        print(f"{p.stem}: exit {status}", flush=True)
        worst = max(worst, status)
    return worst


if __name__ == "__main__":
    sys.exit(main())
