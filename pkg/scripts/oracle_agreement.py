#!/usr/bin/env python3
"""Compare the direct solvers with the budget-bisection reference on random
instances and print the worst relative cost gaps."""
import argparse
import sys
import time

import numpy as np

from stratcls.agent import CostModel, cost
from stratcls.complete_info import best_response
from stratcls.errors import Infeasible
from stratcls.incomplete_info import ContributionBelief, best_response_chance_l1, best_response_chance_l2
from stratcls.oracle import budget_bisection_oracle


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=50)
    ap.add_argument("--max-d", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)

    def belief(d, stochastic):
        mu = rng.uniform(-1, 2, d)
        if not stochastic:
            return ContributionBelief(mu, np.zeros((d, d)))
        L = rng.normal(size=(d, d)) * 0.3
        return ContributionBelief(mu, L @ L.T)

    suites = {
        "complete l1.5": (1.5, False), "complete l2": (2.0, False), "complete l3": (3.0, False),
        "chance l1": (1.0, True), "chance l2": (2.0, True),
    }
    for label, (p, stochastic) in suites.items():
        worst, t0, done = 0.0, time.perf_counter(), 0
        while done < args.instances:
            d = int(rng.integers(1, args.max_d + 1))
            b = belief(d, stochastic)
            model = CostModel(p, rng.uniform(0.5, 2, d) if p != 2.0 or not stochastic else np.ones(d))
            delta = float(rng.uniform(0.05, 0.5))
            try:
                if not stochastic:
                    e = best_response(b.mu, model, 1.0)
                elif p == 1.0:
                    e = best_response_chance_l1(b, model.weights, 1.0, delta, certify=False)
                else:
                    e = best_response_chance_l2(b, 1.0, delta)
            except Infeasible:
                continue
            ref = cost(model, budget_bisection_oracle(b, model, 1.0, delta, tol=1e-8))
            worst = max(worst, abs(cost(model, e) - ref) / ref)
            done += 1
        print(f"{label:14s} worst relative gap {worst:.2e} over {done} instances ({time.perf_counter() - t0:.1f}s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
