import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import dataset_from, random_dataset
from rankinfer.debias import debias
from rankinfer.errors import AlphaOutOfRange, IndexOutOfRange, UnsupportedProperty
from rankinfer.estimate import solve_mle
from rankinfer.inference import (
    FDR_BY,
    SelectionResult,
    TestReport,
    bh_cutoff,
    by_cutoff,
    normal_quantile,
    select_by,
    select_topk_fdr_by,
    select_topk_fwer,
    topk_p_values,
)
from rankinfer.inference import test_general_property as general_test
from rankinfer.inference import test_pairwise as pairwise_test
from rankinfer.inference import test_topk as topk_test
from rankinfer.model import PairwisePreferred, RankingProperty, TopK


def brute_force_by(p, alpha):
    """Scan every k and keep the largest satisfying the step-up condition."""
    n = len(p)
    N = sum(1.0 / k for k in range(1, n + 1))
    srt = sorted(p)
    r = 0
    for k in range(1, n + 1):
        if srt[k - 1] <= k * alpha / (n * N):
            r = k
    cutoff = r * alpha / (n * N) if r else 0.0
    return {i for i in range(n) if r and p[i] <= cutoff}, r


@pytest.fixture(scope="module")
def fitted_top():
    theta = np.r_[np.full(10, 2.0), np.full(30, -2.0 / 3.0)]
    from rankinfer.simulate import simulate_dataset

    data = simulate_dataset(theta, 0.5, 100, 4)
    fit = solve_mle(data)
    return theta, data, debias(fit.theta, data, fit.lambda0)


def test_normal_quantile():
    assert normal_quantile(0.95) == pytest.approx(1.6448536269514722, abs=1e-12)
    assert normal_quantile(0.5) == 0.0


def test_pairwise_on_symmetric_fixture():
    data = dataset_from(2, [(0, 1)], [[1, 0, 1, 0]])
    res = debias(solve_mle(data).theta, data)
    rep = pairwise_test(res, 0, 1, 0.05)
    assert rep.statistic == pytest.approx(0.0, abs=1e-12)
    assert rep.p_value == pytest.approx(0.5)
    assert not rep.reject
    assert rep.method == "NormalZ"


def test_pairwise_formula(fitted_top):
    _, data, res = fitted_top
    rep = pairwise_test(res, 3, 20, 0.05)
    T = res.theta11
    z = np.sqrt(data.L) * (res.theta_debiased.values[3] - res.theta_debiased.values[20]) / np.sqrt(
        T[3, 3] + T[20, 20] - 2 * T[3, 20]
    )
    assert rep.statistic == pytest.approx(z)
    assert rep.reject
    assert pairwise_test(res, 20, 3, 0.05).statistic == pytest.approx(-z)


def test_pairwise_errors(fitted_top):
    _, _, res = fitted_top
    with pytest.raises(AlphaOutOfRange):
        pairwise_test(res, 0, 1, 0.0)
    with pytest.raises(IndexOutOfRange):
        pairwise_test(res, 0, 99, 0.05)


def test_report_invariants():
    prop = PairwisePreferred(0, 1)
    with pytest.raises(ValueError):
        TestReport(prop, 1.0, 2.0, 0.5, True, 0.05, "NormalZ")
    with pytest.raises(ValueError):
        TestReport(prop, 1.0, 2.0, 0.0, False, 0.05, "NormalZ")
    # boundary: equality is not rejection
    assert not TestReport(prop, 1.6448536269514722, normal_quantile(0.95), 0.05, False, 0.05, "NormalZ").reject


def test_topk_statistic_and_decision(fitted_top):
    theta, data, res = fitted_top
    rep = topk_test(res, data, 2, 10, 0.05, B=500, seed=1)
    td = res.theta_debiased.values
    expected = np.sqrt(res.scale_np * data.L) * (td[2] - np.sort(td)[::-1][10])
    assert rep.statistic == pytest.approx(expected)
    assert rep.reject and rep.method == "BootstrapMax"
    assert not topk_test(res, data, 25, 10, 0.05, B=500, seed=1).reject


def test_topk_item_at_boundary_has_zero_statistic(fitted_top):
    _, data, res = fitted_top
    td = res.theta_debiased.values
    i = int(np.argsort(-td, kind="stable")[10])  # holds the 11th largest score
    rep = topk_test(res, data, i, 10, 0.05, B=300, seed=0)
    assert rep.statistic == 0.0
    assert rep.threshold > 0 and not rep.reject


def test_topk_k_equals_n_minus_one(fitted_top):
    _, data, res = fitted_top
    td = res.theta_debiased.values
    i = int(np.argmax(td))
    rep = topk_test(res, data, i, data.n - 1, 0.05, B=200, seed=0)
    assert rep.statistic == pytest.approx(np.sqrt(res.scale_np * data.L) * (td[i] - td.min()))
    assert rep.statistic > 0
    with pytest.raises(ValueError):
        topk_test(res, data, i, data.n, 0.05, B=200, seed=0)


def test_general_property_dispatch(fitted_top):
    _, data, res = fitted_top
    assert general_test(res, data, PairwisePreferred(1, 2), 0.1) == pairwise_test(res, 1, 2, 0.1)
    assert general_test(res, data, TopK(4, 10), 0.1, 300, 7) == topk_test(
        res, data, 4, 10, 0.1, 300, 7
    )

    class Median(RankingProperty):
        i = 0

    with pytest.raises(UnsupportedProperty):
        general_test(res, data, Median(), 0.1)


def test_lowering_alpha_never_adds_rejections(fitted_top):
    _, data, res = fitted_top
    prev = None
    for a in (0.4, 0.2, 0.1, 0.05, 0.01, 0.001):
        rej = [topk_test(res, data, i, 10, a, 300, 2).reject for i in range(0, 40, 3)]
        rej += [pairwise_test(res, i, i + 1, a).reject for i in range(0, 39, 3)]
        if prev is not None:
            assert all(p or not r for p, r in zip(prev, rej))
        prev = rej


def test_by_example():
    r, cutoff = by_cutoff([0.001, 0.2, 0.9], 0.05)
    assert r == 1
    assert cutoff == pytest.approx(0.05 / (3 * 11 / 6))
    sel = select_by([0.001, 0.2, 0.9], 0.05, K=1)
    assert sel.selected == (0,)
    assert sel.to_dict() == {
        "method": "FDR_BY", "alpha": 0.05, "K": 1, "selected": [0],
        "p_values": [0.001, 0.2, 0.9], "threshold_used": cutoff,
    }


def test_by_all_or_nothing():
    assert select_by(np.ones(10), 0.05).selected == ()
    assert select_by(np.ones(10), 0.05).threshold_used == 0.0
    assert select_by(np.full(10, 1 / 100_001), 0.05).selected == tuple(range(10))


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 20), elements=st.floats(1e-6, 1.0)), st.sampled_from([0.01, 0.05, 0.2]))
def test_by_matches_brute_force_and_is_within_bh(p, alpha):
    sel = select_by(p, alpha)
    expected, r = brute_force_by(list(p), alpha)
    assert set(sel.selected) == expected
    assert len(sel.selected) >= r  # ties at the cutoff can add items
    rb, cb = bh_cutoff(p, alpha)
    bh = {i for i in range(len(p)) if rb and p[i] <= cb}
    assert set(sel.selected) <= bh


def test_selection_result_validation():
    with pytest.raises(ValueError):
        SelectionResult((5,), np.ones(3), FDR_BY, 0.05, None, 0.0)
    s = SelectionResult((2, 0), np.ones(3), FDR_BY, 0.05, None, 0.0)
    assert s.selected == (0, 2)


def test_fwer_selects_separated_block(fitted_top):
    _, data, res = fitted_top
    sel = select_topk_fwer(res, data, 10, 0.05, B=1000, seed=3)
    assert sel.selected == tuple(range(10))
    assert sel.method == "FWER" and sel.threshold_used > 0
    box = select_topk_fwer(res, data, 10, 0.05, B=1000, seed=3, conservative_box=True)
    assert set(box.selected) <= set(sel.selected)
    assert box.threshold_used == pytest.approx(2 * sel.threshold_used)


def test_fwer_shrinks_as_alpha_falls():
    theta, data = random_dataset(20, 0.6, 30, 8, spread=1.5)
    res = debias(solve_mle(data).theta, data)
    sizes = [len(select_topk_fwer(res, data, 5, a, B=500, seed=1).selected) for a in (0.5, 0.2, 0.05, 0.001)]
    assert sizes == sorted(sizes, reverse=True)


def test_fdr_by_selection(fitted_top):
    _, data, res = fitted_top
    sel = select_topk_fdr_by(res, data, 10, 0.05, B=2000, seed=0)
    assert sel.selected == tuple(range(10))
    stats, pvals = topk_p_values(res, data, 10, B=2000, seed=0)
    np.testing.assert_array_equal(sel.p_values, pvals)
    assert set(sel.selected) == set(select_by(pvals, 0.05).selected)


def test_fdr_p_values_independent_of_threads(fitted_top):
    _, data, res = fitted_top
    _, a = topk_p_values(res, data, 10, B=300, seed=9, threads=1)
    _, b = topk_p_values(res, data, 10, B=300, seed=9, threads=3)
    np.testing.assert_array_equal(a, b)
    # the per-item stream matches a standalone test of that item
    rep = topk_test(res, data, 4, 10, 0.05, B=300, seed=9)
    assert rep.p_value == a[4]
