import json

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import dags, random_dag
from stratcls.errors import CycleDetected, DimensionMismatch, DomainError, SchemaError
from stratcls.graph import (
    CausalGraph,
    Edge,
    Feature,
    contribution_matrix,
    delta_x,
    is_bipartite_causal,
    max_path_length,
    path_oracle,
    validate_dag,
)


def chain(*weights):
    d = len(weights) + 1
    feats = tuple(Feature(f"x{i}", i == 0) for i in range(d))
    return CausalGraph(feats, tuple(Edge(i, i + 1, w) for i, w in enumerate(weights)))


def test_chain_contribution_multiplies_weights():
    C = chain(2.0, 3.0).contribution()
    assert C[0, 2] == 6.0
    assert C[0, 1] == 2.0
    assert C[1, 2] == 3.0
    np.testing.assert_array_equal(np.diag(C), 1.0)


def test_diamond_sums_paths():
    feats = tuple(Feature(n, False) for n in "abcd")
    g = CausalGraph(feats, (Edge(0, 1, 0.5), Edge(0, 2, 2.0), Edge(1, 3, 4.0), Edge(2, 3, -1.0)))
    assert g.contribution()[0, 3] == pytest.approx(0.5 * 4.0 + 2.0 * -1.0)
    assert path_oracle(g, 0, 3) == pytest.approx(0.0)


def test_empty_graph_is_identity():
    g = CausalGraph(tuple(Feature(f"x{i}", True) for i in range(4)))
    np.testing.assert_array_equal(g.contribution(), np.eye(4))


@settings(max_examples=60, deadline=None)
@given(dags())
def test_contribution_matches_path_enumeration(g):
    C = g.contribution()
    for i in range(g.d):
        for j in range(g.d):
            assert C[i, j] == pytest.approx(path_oracle(g, i, j), abs=1e-10, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(dags())
def test_contribution_inverts_i_minus_a(g):
    C = g.contribution()
    np.testing.assert_allclose(C @ (np.eye(g.d) - g.adjacency()), np.eye(g.d), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(dags())
def test_topological_order_respects_edges(g):
    order = validate_dag(g)
    pos = {v: k for k, v in enumerate(order)}
    assert sorted(order) == list(range(g.d))
    for e in g.edges:
        assert pos[e.src] < pos[e.dst]


def test_topological_ties_by_index():
    g = CausalGraph(tuple(Feature(n, False) for n in "abc"), (Edge(2, 0, 1.0),))
    assert validate_dag(g) == [1, 2, 0]


def test_cycle_reported_with_names():
    feats = tuple(Feature(n, False) for n in "abcd")
    g = CausalGraph(feats, (Edge(0, 1, 1.0), Edge(1, 2, 1.0), Edge(2, 1, 1.0), Edge(2, 3, 1.0)))
    with pytest.raises(CycleDetected) as info:
        g.contribution()
    cyc = info.value.cycle
    assert cyc[0] == cyc[-1]
    assert set(cyc) == {1, 2}
    assert "b" in str(info.value) and "c" in str(info.value)


def test_cycle_downstream_of_leftover_node():
    # node 3 has no leftover successor; the cycle search must not start a dead-end walk there
    feats = tuple(Feature(n, False) for n in "abcd")
    g = CausalGraph(feats, (Edge(1, 2, 1.0), Edge(2, 1, 1.0), Edge(1, 3, 1.0), Edge(0, 1, 1.0)))
    with pytest.raises(CycleDetected) as info:
        validate_dag(g)
    assert set(info.value.cycle) == {1, 2}


def test_non_nilpotent_matrix_rejected():
    with pytest.raises(DomainError):
        contribution_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))


@pytest.mark.parametrize("edges, exc", [
    ((Edge(0, 0, 1.0),), SchemaError),
    ((Edge(0, 1, 1.0), Edge(0, 1, 2.0)), SchemaError),
    ((Edge(0, 5, 1.0),), SchemaError),
    ((Edge(0, 1, float("nan")),), SchemaError),
])
def test_invalid_graphs(edges, exc):
    with pytest.raises(exc):
        CausalGraph((Feature("a", True), Feature("b", False)), edges)


def test_duplicate_feature_names():
    with pytest.raises(SchemaError):
        CausalGraph((Feature("a", True), Feature("a", False)))


def test_json_round_trip(tmp_path, rng):
    g = random_dag(rng, 6, 0.5)
    path = tmp_path / "g.json"
    path.write_text(json.dumps(g.to_dict()))
    assert CausalGraph.load(path) == g


def test_json_unknown_endpoint():
    with pytest.raises(SchemaError):
        CausalGraph.from_dict({"features": [{"name": "a", "desirable": True}],
                               "edges": [{"src": "a", "dst": "zz", "weight": 1}]})


def test_json_missing_field():
    with pytest.raises(SchemaError):
        CausalGraph.from_dict({"features": [{"name": "a"}]})


def test_delta_x_is_transpose_product():
    C = chain(2.0).contribution()
    np.testing.assert_array_equal(delta_x(C, np.array([1.0, 0.0])), [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        delta_x(C, np.ones(3))


def test_bipartite_and_depth():
    assert is_bipartite_causal(chain(1.0))
    assert not is_bipartite_causal(chain(1.0, 1.0))
    assert max_path_length(chain(1.0, 1.0, 1.0)) == 3
    assert max_path_length(CausalGraph((Feature("a", True),))) == 0
