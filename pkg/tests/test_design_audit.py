import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stratcls.agent import CostModel, beta_of
from stratcls.case_study import build_cvd_graph
from stratcls.complete_info import best_response, check_l1_desirability
from stratcls.design_audit import (
    audit_classifier,
    membership_single_desirable,
    membership_undesirable_bounded,
    nonconvexity_witness,
)
from stratcls.errors import DimensionMismatch, DomainError, PartitionError, PreconditionError

INV_SQRT2 = 1 / np.sqrt(2)


@pytest.mark.parametrize("case", ["l1", "lp"])
def test_witness_truth_table(case):
    w = nonconvexity_witness(case)
    assert w.memberships == (True, True, False)
    assert all(isinstance(m, bool) for m in w.memberships)
    np.testing.assert_array_equal(w.midpoint, 0.5 * (np.array(w.z_first) + np.array(w.z_second)))


def test_witness_points():
    w = nonconvexity_witness("l1")
    assert (w.z_first, w.z_second, w.midpoint) == ((4, 7, 3, 6), (7, 4, 3, 6), (5.5, 5.5, 3, 6))
    w = nonconvexity_witness("lp")
    assert (w.z_first, w.z_second, w.midpoint) == ((0, 1, 1), (1, 0, 1), (0.5, 0.5, 1))
    with pytest.raises(DomainError):
        nonconvexity_witness("l7")


def test_single_desirable_example():
    mask = [True, False, False]
    assert membership_single_desirable([2.0, 1.0, 1.0], np.eye(3), np.ones(3), 2.0, INV_SQRT2, mask)
    assert not membership_single_desirable([1.4, 1.0, 1.0], np.eye(3), np.ones(3), 2.0, INV_SQRT2, mask)
    assert not membership_single_desirable([0.0, 1.0, 0.0], np.eye(3), np.ones(3), 2.0, INV_SQRT2, mask)


def test_single_desirable_l1_branch_is_ratio_check():
    mask = np.array([False, True, False])
    for z in ([1.0, 2.0, 0.5], [2.0, 2.0, 0.0], [0.0, 0.0, 1.0]):
        assert membership_single_desirable(z, np.eye(3), np.ones(3), 1.0, 0.5, mask) == \
            check_l1_desirability(np.array(z), np.ones(3), mask)


def test_single_desirable_errors():
    with pytest.raises(PartitionError):
        membership_single_desirable([1.0, 1.0], np.eye(2), np.ones(2), 2.0, 0.5, [True, True])
    with pytest.raises(PreconditionError):
        membership_single_desirable([1.0, -1.0], np.eye(2), np.ones(2), 2.0, 0.5, [True, False])
    with pytest.raises(DomainError):
        membership_single_desirable([1.0, 1.0], np.eye(2), np.ones(2), 3.5, 0.5, [True, False])


def test_undesirable_bounded_examples():
    mask = [True, False, False]
    assert membership_undesirable_bounded([5.0, 0.0, 0.0], np.eye(3), 2.0, 1e-9, mask)
    assert membership_undesirable_bounded([0.0, 3.0, 4.0], np.eye(3), 2.0, 5.0, mask)
    assert not membership_undesirable_bounded([0.0, 3.0, 4.0], np.eye(3), 2.0, 4.9, mask)
    with pytest.raises(DomainError):
        membership_undesirable_bounded([0.0, 3.0, 4.0], np.eye(3), 2.0, 0.0, mask)


def _single_desirable_agrees_with_solver(z, c, p, beta, mask):
    e = best_response(z, CostModel(p, c), 1.0)
    return beta_of(e, mask) >= beta


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1.5, 2.0, 3.0]), st.floats(0.1, 0.9))
def test_single_desirable_agrees_with_best_response(seed, p, beta):
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.01, 2.0, 4)
    c = rng.uniform(0.5, 2.0, 4)
    mask = np.array([False, False, True, False])
    e = best_response(z, CostModel(p, c), 1.0)
    achieved = beta_of(e, mask)
    if abs(achieved - beta) < 1e-9:
        return
    assert membership_single_desirable(z, np.eye(4), c, p, beta, mask) == (achieved >= beta)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_single_desirable_convexity_sampling(p):
    rng = np.random.default_rng(int(p * 100))
    C = build_cvd_graph().contribution()
    mask = np.zeros(8, dtype=bool)
    mask[2] = True
    c = rng.uniform(0.5, 2.0, 8)
    beta = 0.6
    members = []
    while len(members) < 60:
        h = rng.uniform(0, 1, 8) * np.where(np.arange(8) == 2, 5.0, 1.0)
        if membership_single_desirable(h, C, c, p, beta, mask):
            members.append(h)
    pairs = 0
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            for lam in (0.25, 0.5, 0.75):
                assert membership_single_desirable(lam * members[i] + (1 - lam) * members[j], C, c, p, beta, mask)
            pairs += 1
            if pairs >= 500:
                return


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_undesirable_bounded_convexity_sampling(p):
    rng = np.random.default_rng(7)
    C = build_cvd_graph().contribution()
    mask = build_cvd_graph().desirable_mask
    members = [h for h in rng.uniform(-1, 1, (400, 8)) if membership_undesirable_bounded(h, C, p, 1.2, mask)]
    for k in range(min(500, len(members) - 1)):
        a, b = members[k], members[k + 1]
        for lam in (0.25, 0.5, 0.75):
            assert membership_undesirable_bounded(lam * a + (1 - lam) * b, C, p, 1.2, mask)


def test_audit_hpt_l2():
    g = build_cvd_graph()
    C = g.contribution()
    h0 = np.eye(8)[6]
    rep = audit_classifier(h0, C, CostModel.uniform(8, 2.0), g.desirable_mask, 0.5, 1.0)
    z = C @ h0
    assert rep.achieved_beta == pytest.approx(np.linalg.norm(z[:4]) / np.linalg.norm(z), rel=1e-12)
    assert rep.achieved_beta == pytest.approx(1.58 / np.sqrt(1.58 ** 2 + 1), abs=2e-3)
    assert rep.desirability_check
    assert rep.undesirable_norm == 1.0
    assert rep.witness_notes == []


def test_audit_beta_is_recomputed_bit_for_bit(rng):
    g = build_cvd_graph()
    C = g.contribution()
    for p in (1.0, 1.5, 2.0, 3.0):
        h0 = rng.normal(size=8)
        model = CostModel(p, rng.uniform(0.5, 2.0, 8))
        rep = audit_classifier(h0, C, model, g.desirable_mask, 0.5, 2.0)
        assert rep.achieved_beta == beta_of(best_response(C @ h0, model, 2.0), g.desirable_mask)


def test_audit_no_undesirable_contribution():
    rep = audit_classifier([1.0, 0.0], np.eye(2), CostModel.uniform(2), [True, False], 0.9)
    assert rep.achieved_beta == 1.0
    assert rep.desirability_check


def test_audit_zero_alpha_and_rank_deficiency():
    rep = audit_classifier([1.0, 1.0], np.array([[1.0, 1.0], [1.0, 1.0]]), CostModel.uniform(2), [True, False], 0.5,
                           alpha=0.0)
    assert rep.achieved_beta is None
    assert any("alpha" in n for n in rep.witness_notes)
    assert any("rank" in n for n in rep.witness_notes)
    with pytest.raises(DimensionMismatch):
        audit_classifier([1.0], np.eye(2), CostModel.uniform(2), [True, False], 0.5)
