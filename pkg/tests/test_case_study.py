import io
import math

import numpy as np
import pytest

from stratcls.case_study import (
    CLASSIFIERS,
    FEATURES,
    SweepConfig,
    build_classifier_prior,
    build_cvd_graph,
    cvd_fuzzy_scores,
    figure_tables,
    fuzzy_to_weight,
    graph_from_fuzzy_scores,
    read_fuzzy_scores,
    reproduce_table_mu,
    results_csv,
    run_sweep,
)
from stratcls.errors import DomainError, SchemaError, UnknownClassifier
from stratcls.graph import is_bipartite_causal
from stratcls.incomplete_info import belief_model1, feasibility_psd

SLACK = 1e-6


@pytest.fixture(scope="module")
def sweep():
    return run_sweep()


def test_fuzzy_to_weight():
    assert fuzzy_to_weight(0.5) is None
    assert fuzzy_to_weight(0.2) is None
    assert fuzzy_to_weight(1.0) == 1.0
    assert fuzzy_to_weight(0.75) == 0.5
    for bad in (-0.1, 1.1):
        with pytest.raises(DomainError):
            fuzzy_to_weight(bad)


def test_cvd_graph_shape():
    g = build_cvd_graph()
    assert tuple(g.names) == FEATURES
    assert g.desirable_mask.tolist() == [True] * 4 + [False] * 4
    assert len(g.edges) == 15
    assert is_bipartite_causal(g)
    A = g.adjacency()
    assert A[g.index("Alcohol"), g.index("HPT")] == 0.62
    assert A[g.index("Diet"), g.index("Obesity")] == 0.86
    assert A[g.index("Smoking"), g.index("Obesity")] == 0.0
    np.testing.assert_array_equal(g.contribution(), np.eye(8) + A)


def test_fuzzy_fixture_rebuilds_graph():
    g = build_cvd_graph()
    rebuilt = graph_from_fuzzy_scores(cvd_fuzzy_scores())
    assert rebuilt.names == g.names
    np.testing.assert_allclose(rebuilt.adjacency(), g.adjacency(), atol=1e-12)


def test_fuzzy_csv_validation():
    with pytest.raises(SchemaError):
        read_fuzzy_scores(io.StringIO("a,b,c\n"))
    with pytest.raises(SchemaError):
        read_fuzzy_scores(io.StringIO("src,dst,score\nDiet,DM,high\n"))
    with pytest.raises(SchemaError):
        graph_from_fuzzy_scores([("Diet", "Nope", 0.9)])


def test_classifier_prior():
    prior = build_classifier_prior("HPT", 1.0)
    assert prior.mean.tolist() == [0, 0, 0, 0, 0, 0, 1, 0]
    assert np.diag(prior.covariance).tolist() == [0, 0, 0, 0, 1, 1, 1, 1]
    assert not np.any(build_classifier_prior("DM", 0.0).covariance)
    with pytest.raises(UnknownClassifier):
        build_classifier_prior("BMI", 1.0)


def test_dm_mean_contribution():
    b = belief_model1(build_cvd_graph().contribution(), build_classifier_prior("DM", 2.0))
    np.testing.assert_allclose(b.mu, [0.1, 0.84, 0.82, 0.52, 1, 0, 0, 0], atol=1e-12)


def test_table_mu_norms():
    rows = {r.classifier: r for r in reproduce_table_mu()}
    assert rows["HPT"].l2_desirable == pytest.approx(1.58, abs=0.005)
    for r in rows.values():
        assert r.l2_undesirable == 1.0


def test_sweep_config_validation():
    with pytest.raises(SchemaError):
        SweepConfig(deltas=(0.6,))
    with pytest.raises(SchemaError):
        SweepConfig(sigmas=())
    with pytest.raises(UnknownClassifier):
        SweepConfig(classifiers=("BMI",))
    with pytest.raises(SchemaError):
        SweepConfig.from_dict({"deltass": [0.1]})
    assert SweepConfig.from_dict({"alphas": [2]}).alphas == (2.0,)


def test_sweep_shape_and_order(sweep):
    cfg = SweepConfig()
    assert len(sweep) == len(cfg.classifiers) * len(cfg.alphas) * len(cfg.sigmas) * len(cfg.deltas)
    keys = [(r.classifier, r.alpha, r.sigma, r.delta) for r in sweep]
    assert keys == [(c, a, s, d) for c in cfg.classifiers for a in cfg.alphas for s in cfg.sigmas
                    for d in cfg.deltas]
    for r in sweep:
        assert (r.beta is not None) == r.feasible
        assert r.error is None


def test_sweep_parallel_matches_serial(sweep):
    assert run_sweep(SweepConfig(), jobs=2) == sweep


def test_feasibility_cutoff_matches_verdicts(sweep):
    C = build_cvd_graph().contribution()
    for r in sweep:
        b = belief_model1(C, build_classifier_prior(r.classifier, r.sigma))
        assert feasibility_psd(b, r.alpha, r.delta).feasible == r.feasible


def _by(sweep):
    return {(r.classifier, r.alpha, r.sigma, r.delta): r for r in sweep}


def test_beta_trends(sweep):
    cfg = SweepConfig()
    rows = _by(sweep)
    for c in CLASSIFIERS:
        for a in cfg.alphas:
            for d in cfg.deltas:
                betas = [rows[c, a, s, d].beta for s in cfg.sigmas if rows[c, a, s, d].feasible]
                assert all(x >= y - SLACK for x, y in zip(betas, betas[1:]))
            for s in cfg.sigmas:
                betas = [rows[c, a, s, d].beta for d in cfg.deltas if rows[c, a, s, d].feasible]
                assert all(y >= x - SLACK for x, y in zip(betas, betas[1:]))


def test_cost_trends(sweep):
    cfg = SweepConfig()
    rows = _by(sweep)
    for c in CLASSIFIERS:
        for s in cfg.sigmas:
            for d in cfg.deltas:
                costs = [rows[c, a, s, d].cost for a in sorted(cfg.alphas) if rows[c, a, s, d].feasible]
                assert all(y >= x - SLACK for x, y in zip(costs, costs[1:]))
            for a in cfg.alphas:
                costs = [rows[c, a, s, d].cost for d in cfg.deltas if rows[c, a, s, d].feasible]
                assert all(y <= x + SLACK for x, y in zip(costs, costs[1:]))


def test_beta_independent_of_alpha(sweep):
    rows = _by(sweep)
    for (c, a, s, d), r in rows.items():
        if a == 1.0 and r.feasible:
            assert rows[c, 10.0, s, d].beta == pytest.approx(r.beta, abs=1e-6)


def test_delta_half_ignores_sigma(sweep):
    rows = _by(sweep)
    for c in CLASSIFIERS:
        betas = [rows[c, 1.0, s, 0.5].beta for s in SweepConfig().sigmas]
        assert max(betas) - min(betas) <= 1e-9


def test_all_classifiers_favour_desirable_at_low_uncertainty():
    rows = _by(run_sweep(SweepConfig(sigmas=(0.1, 0.25, 0.5), deltas=(0.1,), alphas=(1.0,))))
    for c in CLASSIFIERS:
        for s in (0.1, 0.25, 0.5):
            assert rows[c, 1.0, s, 0.1].beta > 0.5, (c, s, rows[c, 1.0, s, 0.1].beta)


def test_results_csv(sweep):
    text = results_csv(sweep)
    lines = text.splitlines()
    assert lines[0] == "classifier,alpha,sigma,delta,feasible,beta,cost"
    assert len(lines) == len(sweep) + 1
    infeasible = next(r for r in sweep if not r.feasible)
    assert f"{infeasible.classifier},{infeasible.alpha:.12g},{infeasible.sigma:.12g},{infeasible.delta:.12g}" \
           f",false,," in text


def test_figure_tables(sweep):
    tables = figure_tables(sweep)
    assert len(tables) == 2 * len(CLASSIFIERS) * 2
    head = tables["beta_vs_sigma_DM_alpha1.csv"].splitlines()
    assert head[0].startswith("sigma,beta_delta=0.1")
    assert len(head) == 1 + len(SweepConfig().sigmas)
    assert math.isclose(float(head[1].split(",")[1]), _by(sweep)["DM", 1.0, 0.1, 0.1].beta, rel_tol=1e-11)
