"""Weighted causal DAG over features and its contribution matrix.

An edge ``i -> j`` with weight ``w`` means a unit of change in feature ``i``
moves feature ``j`` by ``w``. The contribution matrix ``C`` collects the
total (direct plus indirect) influence, so effort ``e`` changes features by
``C.T @ e``.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CycleDetected, DimensionMismatch, DomainError, SchemaError


@dataclass(frozen=True)
class Feature:
    name: str
    desirable: bool


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    weight: float


@dataclass(frozen=True)
class CausalGraph:
    features: tuple[Feature, ...]
    edges: tuple[Edge, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "edges", tuple(self.edges))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        seen = set()
        d = len(self.features)
        for e in self.edges:
            if not (0 <= e.src < d and 0 <= e.dst < d):
                raise SchemaError(f"edge {e} references an unknown feature")
            if e.src == e.dst:
                raise SchemaError(f"self-loop on feature {names[e.src]!r}")
            if (e.src, e.dst) in seen:
                raise SchemaError(f"duplicate edge {names[e.src]} -> {names[e.dst]}")
            if not np.isfinite(e.weight):
                raise SchemaError("edge weights must be finite")
            seen.add((e.src, e.dst))

    @property
    def d(self) -> int:
        return len(self.features)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}")

    @property
    def desirable_mask(self) -> np.ndarray:
        return np.array([f.desirable for f in self.features], dtype=bool)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.d, self.d))
        for e in self.edges:
            A[e.src, e.dst] = e.weight
        return A

    def contribution(self) -> np.ndarray:
        validate_dag(self)
        return contribution_matrix(self.adjacency())

    def children(self, i: int) -> list[tuple[int, float]]:
        return [(e.dst, e.weight) for e in self.edges if e.src == i]

    # -- serialization -------------------------------------------------
    @classmethod
    def from_dict(cls, data: dict) -> "CausalGraph":
        try:
            feats = [Feature(str(f["name"]), bool(f["desirable"])) for f in data["features"]]
            lookup = {f.name: i for i, f in enumerate(feats)}
            edges = []
            for raw in data.get("edges", []):
                for key in ("src", "dst"):
                    if raw[key] not in lookup:
                        raise SchemaError(f"edge endpoint {raw[key]!r} is not a declared feature")
                edges.append(Edge(lookup[raw["src"]], lookup[raw["dst"]], float(raw["weight"])))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"malformed graph: {exc!r}") from exc
        return cls(tuple(feats), tuple(edges))

    def to_dict(self) -> dict:
        names = self.names
        return {
            "features": [{"name": f.name, "desirable": f.desirable} for f in self.features],
            "edges": [
                {"src": names[e.src], "dst": names[e.dst], "weight": e.weight} for e in self.edges
            ],
        }

    @classmethod
    def load(cls, path) -> "CausalGraph":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)


def validate_dag(graph: CausalGraph) -> list[int]:
    """Topological order of the features, ties broken by declaration order.

    Raises CycleDetected naming one cycle when the graph is not acyclic.
    """
    d = graph.d
    indeg = [0] * d
    succ = [[] for _ in range(d)]
    for e in graph.edges:
        succ[e.src].append(e.dst)
        indeg[e.dst] += 1
    ready = [i for i in range(d) if indeg[i] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        i = heapq.heappop(ready)
        order.append(i)
        for j in succ[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                heapq.heappush(ready, j)
    if len(order) < d:
        pred = [[] for _ in range(d)]
        for e in graph.edges:
            pred[e.dst].append(e.src)
        raise CycleDetected(_find_cycle(pred, set(range(d)) - set(order)), graph.names)
    return order


def _find_cycle(pred, nodes):
    # every leftover node keeps a leftover predecessor; walk backwards to a repeat
    path, pos = [], {}
    node = min(nodes)
    while node not in pos:
        pos[node] = len(path)
        path.append(node)
        node = next(j for j in pred[node] if j in nodes)
    cycle = path[pos[node]:][::-1]
    return cycle + [cycle[0]]


def contribution_matrix(A, tol=1e-15) -> np.ndarray:
    """Sum of powers ``I + A + A^2 + ...`` of a nilpotent adjacency matrix."""
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    C = np.eye(d)
    P = np.eye(d)
    for _ in range(d):
        P = P @ A
        if not np.any(np.abs(P) > tol):
            return C
        C += P
    if np.any(np.abs(P @ A) > tol * max(1.0, np.abs(C).max())):
        raise DomainError("adjacency matrix is not nilpotent (graph has a cycle)")
    return C


def path_oracle(graph: CausalGraph, i: int, j: int) -> float:
    """Sum over every directed path i -> j of the product of its edge weights,
    found by exhaustive depth-first enumeration."""
    if i == j:
        return 1.0
    succ = {}
    for e in graph.edges:
        succ.setdefault(e.src, []).append((e.dst, e.weight))
    total = 0.0
    stack = [(i, 1.0)]
    while stack:
        node, w = stack.pop()
        for nxt, we in succ.get(node, ()):
            if nxt == j:
                total += w * we
            else:
                stack.append((nxt, w * we))
    return total


def delta_x(C, e) -> np.ndarray:
    """Total feature change ``C.T @ e`` induced by exogenous effort ``e``."""
    C = np.asarray(C, dtype=float)
    e = np.asarray(e, dtype=float)
    if e.ndim != 1 or C.shape != (e.size, e.size):
        raise DimensionMismatch(f"effort of length {e.size} vs matrix {C.shape}")
    return C.T @ e


def is_bipartite_causal(graph: CausalGraph) -> bool:
    """True when no feature has both incoming and outgoing edges."""
    has_in = {e.dst for e in graph.edges}
    has_out = {e.src for e in graph.edges}
    return not (has_in & has_out)


def max_path_length(graph: CausalGraph) -> int:
    """Number of edges on the longest directed path."""
    order = validate_dag(graph)
    longest = [0] * graph.d
    for i in order:
        for e in graph.edges:
            if e.src == i:
                longest[e.dst] = max(longest[e.dst], longest[i] + 1)
    return max(longest, default=0)
