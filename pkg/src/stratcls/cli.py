"""Command-line interface: ``stratcls <command> [flags]``.

Exit codes: 0 success, 2 bad input, 3 graph problems (cycles, depth),
4 infeasible program, 5 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import case_study
from .agent import CostModel, beta_of, cost
from .complete_info import best_response
from .design_audit import audit_classifier, nonconvexity_witness
from .errors import (
    CycleDetected,
    DepthExceeded,
    Infeasible,
    NumericalFailure,
    SchemaError,
    StratClsError,
)
from .graph import CausalGraph
from .incomplete_info import (
    ContributionBelief,
    GaussianPrior,
    Model2Sampler,
    belief_model1,
    belief_model2_linear,
    belief_monte_carlo,
    best_response_chance_l1,
    best_response_chance_l2,
    chance_margin,
    feasibility,
    feasibility_psd,
)
from .graph import max_path_length
from .numerics import is_positive_definite
from .oracle import budget_bisection_oracle

EXIT_OK, EXIT_SCHEMA, EXIT_GRAPH, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4, 5
VERIFY_TOL = 1e-8


def default_seed() -> int:
    raw = os.environ.get("STRATCLS_SEED")
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise SchemaError(f"STRATCLS_SEED must be an integer, got {raw!r}") from None


def derive_seed(seed: int, *keys) -> int:
    """Stable per-task seed: hash of the root seed and the task labels."""
    h = hashlib.sha256(repr((int(seed),) + tuple(str(k) for k in keys)).encode())
    return int.from_bytes(h.digest()[:8], "little")


# -- file helpers -------------------------------------------------------------

def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SchemaError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None


def load_graph(path) -> CausalGraph:
    if not Path(path).exists():
        raise SchemaError(f"{path}: no such file")
    graph = CausalGraph.load(path)
    graph.contribution()  # surfaces cycles before any solver runs
    return graph


def _by_name(raw, names, what, default=0.0) -> np.ndarray:
    if not isinstance(raw, dict):
        raise SchemaError(f"{what} must map feature names to numbers")
    unknown = set(raw) - set(names)
    if unknown:
        raise SchemaError(f"{what} name unknown features: {sorted(unknown)}")
    try:
        return np.array([float(raw.get(n, default)) for n in names])
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{what}: {exc}") from None


def load_cost(p: float, weights_path, names) -> CostModel:
    raw = read_json(weights_path) if weights_path else {}
    return CostModel.from_dict({"p": p, "weights": raw}, names)


class Problem:
    """What an agent knows: a deterministic contribution or a Gaussian belief."""

    def __init__(self, names, desirable, belief: ContributionBelief, stochastic: bool):
        self.names = list(names)
        self.desirable = np.asarray(desirable, dtype=bool)
        self.belief = belief
        self.stochastic = stochastic


def load_problem(args) -> Problem:
    if args.belief:
        if args.graph or args.classifier:
            raise SchemaError("--belief cannot be combined with --graph/--classifier")
        data = read_json(args.belief)
        try:
            mu = np.asarray(data["mu"], dtype=float)
            sigma = np.asarray(data.get("sigma", np.zeros((mu.size, mu.size))), dtype=float)
            names = data.get("names", [f"x{i}" for i in range(mu.size)])
            desirable = data.get("desirable", [True] * mu.size)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed belief file: {exc!r}") from None
        if len(names) != mu.size or len(desirable) != mu.size:
            raise SchemaError("belief names/desirable lengths must match mu")
        belief = ContributionBelief(mu, sigma)
        return Problem(names, desirable, belief, bool(np.any(belief.sigma)))
    if not (args.graph and args.classifier):
        raise SchemaError("give either --belief or both --graph and --classifier")
    graph = load_graph(args.graph)
    data = read_json(args.classifier)
    names = graph.names
    known = {"weights", "covariance", "variances", "edge_variances"}
    if not isinstance(data, dict) or set(data) - known:
        raise SchemaError(f"classifier file keys must be among {sorted(known)}")
    h0 = _by_name(data.get("weights", {}), names, "classifier weights")
    C = graph.contribution()
    has_h_cov = "covariance" in data or "variances" in data
    if has_h_cov and "edge_variances" in data:
        raise SchemaError("classifier file may carry classifier or edge uncertainty, not both")
    if "covariance" in data and "variances" in data:
        raise SchemaError("use either covariance or variances, not both")
    if "covariance" in data:
        try:
            cov = np.asarray(data["covariance"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"covariance: {exc}") from None
        belief = belief_model1(C, GaussianPrior(h0, cov))
    elif "variances" in data:
        belief = belief_model1(C, GaussianPrior(h0, np.diag(_by_name(data["variances"], names, "variances"))))
    elif "edge_variances" in data:
        ev = data["edge_variances"]
        labels = [f"{names[e.src]}->{names[e.dst]}" for e in graph.edges]
        if isinstance(ev, (int, float)):
            var = np.full(len(labels), float(ev))
        else:
            var = _by_name(ev, labels, "edge_variances")
        prior_w = GaussianPrior(np.array([e.weight for e in graph.edges]), np.diag(var))
        if max_path_length(graph) <= 1:
            belief = belief_model2_linear(graph, h0, prior_w)
        else:
            belief = belief_monte_carlo(Model2Sampler(graph, h0, prior_w), args.mc_samples,
                                        derive_seed(args.seed, "model2", args.classifier))
    else:
        belief = ContributionBelief(C @ h0, np.zeros((graph.d, graph.d)))
    return Problem(names, graph.desirable_mask, belief, bool(np.any(belief.sigma)))


# -- solving ------------------------------------------------------------------

def solve(problem: Problem, model: CostModel, alpha: float, delta):
    """Return ``(effort, margin, method)``."""
    b = problem.belief
    if not problem.stochastic:
        e = best_response(b.mu, model, alpha)
        return e, float(alpha - b.mu @ e), "complete-information"
    if delta is None:
        raise SchemaError("--delta is required when the classifier carries uncertainty")
    if model.p == 1.0:
        e = best_response_chance_l1(b, model.weights, alpha, delta)
        method = "socp"
    elif model.p == 2.0:
        # weighted l2 is plain l2 in the coordinates u = sqrt(c) e
        s = np.sqrt(model.weights)
        scaled = ContributionBelief(b.mu / s, b.sigma / np.outer(s, s))
        e = best_response_chance_l2(scaled, alpha, delta) / s
        method = "kkt-search"
    else:
        e = budget_bisection_oracle(b, model, alpha, delta, tol=1e-9)
        method = "budget-bisection"
    return e, chance_margin(b, e, alpha, delta), method


def cmd_contribution(args):
    graph = load_graph(args.graph)
    C = graph.contribution()
    lines = [",".join(["", *graph.names])]
    for name, row in zip(graph.names, C):
        lines.append(",".join([name, *(case_study.fmt(v) for v in row)]))
    emit("\n".join(lines) + "\n", args.out)


def cmd_respond(args):
    problem = load_problem(args)
    model = load_cost(args.p, args.cost_weights, problem.names)
    e, margin, method = solve(problem, model, args.alpha, args.delta)
    out = {
        "effort": [float(v) for v in e],
        "features": problem.names,
        "cost": cost(model, e),
        "beta": beta_of(e, problem.desirable) if np.any(e) else None,
        "feasible": True,
        "margin": margin,
        "method": method,
    }
    if args.verify:
        check = (chance_margin(problem.belief, e, args.alpha, args.delta) if problem.stochastic
                 else float(args.alpha - problem.belief.mu @ e))
        out["verified"] = bool(check <= VERIFY_TOL)
        out["verify_margin"] = check
        emit(dump_json(out), args.out)
        if not out["verified"]:
            raise NumericalFailure(f"verification margin {check:.3e} exceeds {VERIFY_TOL:g}")
        return
    emit(dump_json(out), args.out)


def cmd_feasibility(args):
    problem = load_problem(args)
    b = problem.belief
    if is_positive_definite(b.sigma):
        verdict, method = feasibility(b, args.alpha, args.delta), "positive-definite"
    else:
        verdict, method = feasibility_psd(b, args.alpha, args.delta), "pseudo-inverse"
    out = verdict.to_dict()
    out["method"] = method
    if out["norm_value"] == float("inf"):
        out["norm_value"] = None  # riskless direction; JSON has no infinity
    emit(dump_json(out), args.out)
    return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE


def cmd_audit(args):
    graph = load_graph(args.graph)
    data = read_json(args.classifier)
    if not isinstance(data, dict) or "weights" not in data:
        raise SchemaError("classifier file needs a 'weights' mapping")
    h0 = _by_name(data["weights"], graph.names, "classifier weights")
    model = load_cost(args.p, args.cost_weights, graph.names)
    report = audit_classifier(h0, graph.contribution(), model, graph.desirable_mask, args.beta, args.alpha)
    out = report.to_dict()
    out["features"] = graph.names
    emit(dump_json(out), args.out)


def cmd_witness(args):
    emit(dump_json(nonconvexity_witness(args.case).to_dict()), args.out)


def _config(args):
    if args.config:
        data = read_json(args.config)
        if not isinstance(data, dict):
            raise SchemaError("sweep config must be a JSON object")
        data.setdefault("seed", args.seed)
        return case_study.SweepConfig.from_dict(data)
    return case_study.SweepConfig(seed=args.seed)


def cmd_sweep(args):
    rows = case_study.run_sweep(_config(args), jobs=args.jobs)
    emit(case_study.results_csv(rows), args.out)
    if args.figures:
        for name, text in case_study.figure_tables(rows).items():
            write_atomic(Path(args.figures) / name, text)


def cmd_case_study(args):
    out = Path(args.out)
    graph = case_study.build_cvd_graph()
    write_atomic(out / "cvd_graph.json", dump_json(graph.to_dict()))
    write_atomic(out / "table_mu.csv", case_study.table_mu_csv(case_study.reproduce_table_mu(graph)))
    rows = case_study.run_sweep(_config(args), jobs=args.jobs)
    write_atomic(out / "results.csv", case_study.results_csv(rows))
    for name, text in case_study.figure_tables(rows).items():
        write_atomic(out / "figures" / name, text)


# -- parser -------------------------------------------------------------------

def _add_problem_flags(p):
    p.add_argument("--graph", help="causal graph JSON")
    p.add_argument("--classifier", help="classifier JSON (weights plus optional uncertainty)")
    p.add_argument("--belief", help="explicit belief JSON {mu, sigma, names?, desirable?}")
    p.add_argument("--mc-samples", type=int, default=100_000,
                   help="draws for Monte Carlo beliefs on deep graphs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stratcls", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None,
                        help="root seed (default: $STRATCLS_SEED or 42)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("contribution", help="write the contribution matrix as CSV")
    p.add_argument("--graph", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_contribution)

    p = sub.add_parser("respond", help="compute the agent's best response")
    _add_problem_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--cost-weights", help="JSON mapping feature name to cost weight (default 1)")
    p.add_argument("--verify", action="store_true", help="re-check the chance margin of the answer")
    p.add_argument("--out")
    p.set_defaults(func=cmd_respond)

    p = sub.add_parser("feasibility", help="check whether any effort meets the chance constraint")
    _add_problem_flags(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("audit", help="audit a deterministic classifier")
    p.add_argument("--graph", required=True)
    p.add_argument("--classifier", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--cost-weights")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("witness", help="print a non-convexity witness")
    p.add_argument("--case", choices=("l1", "lp"), required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_witness)

    for name, func, help_ in (("sweep", cmd_sweep, "run a beta sweep to CSV"),
                              ("case-study", cmd_case_study, "rebuild the cardiovascular example")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="sweep config JSON (defaults when omitted)")
        p.add_argument("--jobs", type=int, default=1)
        if name == "sweep":
            p.add_argument("--out")
            p.add_argument("--figures", help="directory for per-figure CSVs")
        else:
            p.add_argument("--out", required=True, help="output directory")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = default_seed()
        rc = args.func(args)
        return EXIT_OK if rc is None else rc
    except Infeasible as exc:
        msg = f"infeasible: {exc}"
        if exc.threshold_delta is not None:
            msg += f"\nthreshold_delta={exc.threshold_delta:.12g}"
        print(msg, file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CycleDetected, DepthExceeded) as exc:
        print(f"graph error: {exc}", file=sys.stderr)
        return EXIT_GRAPH
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (StratClsError, ValueError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
