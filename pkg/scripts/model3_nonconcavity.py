#!/usr/bin/env python3
"""Monte-Carlo scan of f(e) = P[omega * h * e >= alpha] for independent
standard normal omega and h; prints the curve and the strongest chord
violation found."""
import argparse
import csv
import sys

import numpy as np

from stratcls.cli import default_seed, derive_seed
from stratcls.incomplete_info import find_nonconcavity, mc_pass_probability_model3


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--e-max", type=float, default=2.0)
    ap.add_argument("--points", type=int, default=40)
    ap.add_argument("--n", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--curve", help="optional CSV path for the (e, f, stderr) curve")
    args = ap.parse_args(argv)
    seed = default_seed() if args.seed is None else args.seed

    w = find_nonconcavity(args.alpha, args.e_max, args.points, args.n, derive_seed(seed, "model3"))
    print(f"e1={w.e1:.4g} f={w.f1.value:.6f}")
    print(f"mid={(w.e1 + w.e2) / 2:.4g} f={w.f_mid.value:.6f}")
    print(f"e2={w.e2:.4g} f={w.f2.value:.6f}")
    print(f"chord gap {w.gap:.6f} = {w.z_score:.1f} combined standard errors")

    if args.curve:
        ss = np.random.SeedSequence(derive_seed(seed, "model3-curve"))
        grid = np.linspace(0.0, 4 * args.e_max, 81)[1:]
        with open(args.curve, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["e", "f", "stderr"])
            for e, child in zip(grid, ss.spawn(grid.size)):
                est = mc_pass_probability_model3(float(e), args.alpha, args.n, child)
                out.writerow([f"{e:.12g}", f"{est.value:.12g}", f"{est.stderr:.12g}"])
        print(f"curve written to {args.curve}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
