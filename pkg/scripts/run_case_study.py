#!/usr/bin/env python3
"""Rebuild the cardiovascular example: mean-contribution table, beta sweep
and per-figure plot data, written under --out."""
import argparse
import sys

from stratcls.cli import main as cli_main


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/case_study")
    ap.add_argument("--config", help="sweep config JSON (default grid when omitted)")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    cmd = ["case-study", "--out", args.out, "--jobs", str(args.jobs)]
    if args.config:
        cmd += ["--config", args.config]
    rc = cli_main(cmd)
    if rc == 0:
        print(f"wrote {args.out}/table_mu.csv, results.csv and figures/")
    return rc


if __name__ == "__main__":
    sys.exit(main())
