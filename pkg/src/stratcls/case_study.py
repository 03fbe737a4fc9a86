"""Cardiovascular-disease example: eight lifestyle and condition features,
four one-hot classifiers with Gaussian uncertainty, and beta sweeps.

Graph weights live in ``data/cvd_graph.json``; ``data/cvd_fuzzy_scores.csv``
holds the expert-score form they are derived from.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .agent import beta_of
from .errors import DomainError, SchemaError, StratClsError, UnknownClassifier
from .graph import CausalGraph, Edge, Feature
from .incomplete_info import (
    GaussianPrior,
    belief_model1,
    best_response_chance_l2,
    feasibility_psd,
)

FEATURES = ("Alcohol", "Diet", "Activity", "Smoking", "DM", "HPL", "HPT", "Obesity")
DESIRABLE = FEATURES[:4]
CLASSIFIERS = ("DM", "HPL", "HPT", "Obesity")
RESULT_HEADER = ("classifier", "alpha", "sigma", "delta", "feasible", "beta", "cost")


def fmt(x) -> str:
    """Locale-free float text with 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    return format(float(x), ".12g")


# -- graph ------------------------------------------------------------------

def fuzzy_to_weight(score: float) -> float | None:
    """Expert agreement score to causal weight; None means no edge."""
    score = float(score)
    if not 0.0 <= score <= 1.0:
        raise DomainError(f"fuzzy score must lie in [0, 1], got {score}")
    if score <= 0.5:
        return None
    return 2.0 * score - 1.0


def read_fuzzy_scores(source) -> list[tuple[str, str, float]]:
    """Parse a ``src,dst,score`` CSV given as a path or an open text stream."""
    text = Path(source).read_text() if isinstance(source, (str, Path)) else source.read()
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["src", "dst", "score"]:
        raise SchemaError("fuzzy score table needs the header 'src,dst,score'")
    rows = []
    for line in reader:
        try:
            rows.append((line["src"].strip(), line["dst"].strip(), float(line["score"])))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad fuzzy score row {line}: {exc}") from exc
    return rows


def graph_from_fuzzy_scores(rows, features=FEATURES, desirable=DESIRABLE) -> CausalGraph:
    feats = tuple(Feature(n, n in desirable) for n in features)
    index = {n: i for i, n in enumerate(features)}
    edges = []
    for src, dst, score in rows:
        if src not in index or dst not in index:
            raise SchemaError(f"fuzzy score row names an unknown feature: {src} -> {dst}")
        w = fuzzy_to_weight(score)
        if w is not None:
            edges.append(Edge(index[src], index[dst], w))
    return CausalGraph(feats, tuple(edges))


def _data_text(name: str) -> str:
    return resources.files("stratcls").joinpath("data").joinpath(name).read_text()


def build_cvd_graph() -> CausalGraph:
    import json

    return CausalGraph.from_dict(json.loads(_data_text("cvd_graph.json")))


def cvd_fuzzy_scores() -> list[tuple[str, str, float]]:
    return read_fuzzy_scores(io.StringIO(_data_text("cvd_fuzzy_scores.csv")))


# -- classifiers ------------------------------------------------------------

def build_classifier_prior(name: str, sigma: float) -> GaussianPrior:
    """One-hot mean on an undesirable feature; variance sigma^2 on each
    undesirable coordinate and none on the desirable ones."""
    if name not in CLASSIFIERS:
        raise UnknownClassifier(f"unknown classifier {name!r}; choose from {', '.join(CLASSIFIERS)}")
    if not sigma >= 0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}")
    mean = np.zeros(len(FEATURES))
    mean[FEATURES.index(name)] = 1.0
    var = np.array([0.0 if f in DESIRABLE else sigma * sigma for f in FEATURES])
    return GaussianPrior(mean, np.diag(var))


@dataclass(frozen=True)
class TableMuRow:
    classifier: str
    mu: tuple[float, ...]
    l2_desirable: float
    l2_undesirable: float


def reproduce_table_mu(graph: CausalGraph | None = None) -> list[TableMuRow]:
    graph = graph or build_cvd_graph()
    C = graph.contribution()
    mask = graph.desirable_mask
    out = []
    for name in CLASSIFIERS:
        mu = belief_model1(C, build_classifier_prior(name, 0.0)).mu
        out.append(TableMuRow(name, tuple(float(v) for v in mu),
                              float(np.linalg.norm(mu[mask])), float(np.linalg.norm(mu[~mask]))))
    return out


def table_mu_csv(rows: list[TableMuRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["classifier", *FEATURES, "l2_D", "l2_U"])
    for r in rows:
        w.writerow([r.classifier, *map(fmt, r.mu), fmt(r.l2_desirable), fmt(r.l2_undesirable)])
    return buf.getvalue()


# -- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    classifiers: tuple[str, ...] = CLASSIFIERS
    sigmas: tuple[float, ...] = (0.1, 0.5, 1.0, 2.0, 3.0)
    deltas: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5)
    alphas: tuple[float, ...] = (1.0, 10.0)
    seed: int = 42

    def __post_init__(self):
        for key in ("classifiers", "sigmas", "deltas", "alphas"):
            val = tuple(getattr(self, key))
            if not val:
                raise SchemaError(f"sweep config field {key!r} must be non-empty")
            object.__setattr__(self, key, val)
        for name in self.classifiers:
            if name not in CLASSIFIERS:
                raise UnknownClassifier(f"unknown classifier {name!r}")
        if any(not (s >= 0 and math.isfinite(s)) for s in self.sigmas):
            raise SchemaError("sigmas must be finite and nonnegative")
        if any(not 0.0 < d <= 0.5 for d in self.deltas):
            raise SchemaError("deltas must lie in (0, 0.5]")
        if any(not (a > 0 and math.isfinite(a)) for a in self.alphas):
            raise SchemaError("alphas must be finite and positive")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {"classifiers", "sigmas", "deltas", "alphas", "seed"}
        extra = set(data) - known
        if extra:
            raise SchemaError(f"unknown sweep config keys: {sorted(extra)}")
        try:
            kw = {k: tuple(float(v) for v in data[k]) for k in ("sigmas", "deltas", "alphas") if k in data}
            if "classifiers" in data:
                kw["classifiers"] = tuple(str(v) for v in data["classifiers"])
            if "seed" in data:
                kw["seed"] = int(data["seed"])
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"malformed sweep config: {exc}") from exc
        return cls(**kw)


@dataclass(frozen=True)
class SweepRow:
    classifier: str
    alpha: float
    sigma: float
    delta: float
    feasible: bool
    beta: float | None = None
    cost: float | None = None
    threshold_delta: float | None = None
    error: str | None = field(default=None, compare=False)

    def csv_fields(self) -> list[str]:
        return [self.classifier, fmt(self.alpha), fmt(self.sigma), fmt(self.delta),
                fmt(self.feasible), fmt(self.beta), fmt(self.cost)]


def _tasks(config: SweepConfig):
    return [(c, a, s, d) for c in config.classifiers for a in config.alphas
            for s in config.sigmas for d in config.deltas]


def _solve_row(task, C=None, mask=None) -> SweepRow:
    name, alpha, sigma, delta = task
    if C is None:
        graph = build_cvd_graph()
        C, mask = graph.contribution(), graph.desirable_mask
    belief = belief_model1(C, build_classifier_prior(name, sigma))
    try:
        verdict = feasibility_psd(belief, alpha, delta)
        if not verdict.feasible:
            return SweepRow(name, alpha, sigma, delta, False, threshold_delta=verdict.threshold_delta)
        e = best_response_chance_l2(belief, alpha, delta)
        return SweepRow(name, alpha, sigma, delta, True, beta_of(e, mask), float(np.linalg.norm(e)),
                        verdict.threshold_delta)
    except StratClsError as exc:
        return SweepRow(name, alpha, sigma, delta, False, error=f"{type(exc).__name__}: {exc}")


def run_sweep(config: SweepConfig | None = None, jobs: int = 1) -> list[SweepRow]:
    """One row per (classifier, alpha, sigma, delta) in config order."""
    config = config or SweepConfig()
    tasks = _tasks(config)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_solve_row, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    graph = build_cvd_graph()
    C, mask = graph.contribution(), graph.desirable_mask
    return [_solve_row(t, C, mask) for t in tasks]


def results_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def figure_tables(rows: list[SweepRow]) -> dict[str, str]:
    """Plot data: beta against sigma (one column per delta) and beta against
    delta (one column per sigma), one file per classifier and alpha."""
    lookup = {(r.classifier, r.alpha, r.sigma, r.delta): r for r in rows}
    names = list(dict.fromkeys(r.classifier for r in rows))
    alphas = list(dict.fromkeys(r.alpha for r in rows))
    sigmas = list(dict.fromkeys(r.sigma for r in rows))
    deltas = list(dict.fromkeys(r.delta for r in rows))
    out = {}
    for name in names:
        for a in alphas:
            tag = f"{name}_alpha{fmt(a)}"
            for fig, xs, ys, key in (
                ("beta_vs_sigma", sigmas, deltas, lambda x, y: (name, a, x, y)),
                ("beta_vs_delta", deltas, sigmas, lambda x, y: (name, a, y, x)),
            ):
                buf = io.StringIO()
                w = csv.writer(buf, lineterminator="\n")
                xname, yname = ("sigma", "delta") if fig == "beta_vs_sigma" else ("delta", "sigma")
                w.writerow([xname, *(f"beta_{yname}={fmt(y)}" for y in ys)])
                for x in xs:
                    w.writerow([fmt(x), *(fmt(lookup[key(x, y)].beta) for y in ys)])
                out[f"{fig}_{tag}.csv"] = buf.getvalue()
    return out


def sweep_row_dict(row: SweepRow) -> dict:
    return asdict(row)
