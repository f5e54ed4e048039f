import numpy as np
import pytest

from conftest import random_dataset
from rankinfer import rng
from rankinfer.bootstrap import (
    BootstrapDraws,
    Explicit,
    Full,
    Star,
    draw_max_statistics,
    multipliers,
    p_value,
    quantile_cw,
    residual_profile,
)
from rankinfer.debias import debias
from rankinfer.errors import AlphaOutOfRange, EmptyEdgeSet
from rankinfer.estimate import gradient, solve_mle


@pytest.fixture(scope="module")
def fitted():
    _, data = random_dataset(12, 0.5, 30, 0)
    res = debias(solve_mle(data).theta, data)
    return res, data, residual_profile(res.theta_hat, data)


def _draws(values):
    v = np.asarray(values, dtype=float)
    return BootstrapDraws(v, Full(), v.size, (0,), 1.0)


def test_profile_rows_average_to_gradient(fitted):
    res, data, R = fitted
    assert R.shape == (data.L, data.n)
    np.testing.assert_allclose(R.mean(axis=0), gradient(res.theta_hat, data), atol=1e-12)


def test_multipliers_layout():
    Z = multipliers(3, 4, 9)
    assert np.array_equal(Z.ravel(), rng.stream(9, rng.BOOTSTRAP).standard_normal(12))


def test_full_and_star_match_explicit_pairs(fitted):
    res, data, R = fitted
    n = data.n
    args = (R, res.theta11)
    full = draw_max_statistics(*args, Full(), res.scale_np, 200, 5)
    expl = draw_max_statistics(*args, Explicit([(i, j) for i in range(n) for j in range(n) if i != j]),
                               res.scale_np, 200, 5)
    np.testing.assert_allclose(full.draws, expl.draws, atol=1e-12)
    star = draw_max_statistics(*args, Star(4), res.scale_np, 200, 5)
    expl = draw_max_statistics(*args, Explicit([(4, j) for j in range(n) if j != 4]), res.scale_np, 200, 5)
    np.testing.assert_allclose(star.draws, expl.draws, atol=1e-12)


def test_draws_match_direct_summation(fitted):
    """Explicit per-replicate sum over a single pair, without the matrix shortcut."""
    res, data, R = fitted
    L, n = R.shape
    i, j = 2, 7
    w = draw_max_statistics(R, res.theta11, Explicit([(i, j)]), res.scale_np, 50, 3).draws
    Z = multipliers(50, L, 3)
    T = res.theta11
    s = np.array([np.sqrt(res.scale_np) * (T[j] - T[i]) @ R[l] for l in range(L)])
    direct = Z @ s / np.sqrt(L)
    np.testing.assert_allclose(w, direct, atol=1e-10)


def test_singleton_edge_set_variance_and_quantile(fitted):
    """Exact Gaussian oracle: W ~ N(0, (1/L) sum_l s_l^2) for a single pair."""
    res, data, R = fitted
    L = data.L
    i, j = 0, 5
    B = 100_000
    d = draw_max_statistics(R, res.theta11, Explicit([(i, j)]), res.scale_np, B, 11)
    s = np.sqrt(res.scale_np) * (R @ (res.theta11[:, j] - res.theta11[:, i]))
    var = np.mean(s**2)
    assert abs(d.draws.mean()) < 4 * np.sqrt(var / B)
    assert d.draws.var() == pytest.approx(var, rel=0.05)
    assert quantile_cw(d, 0.05) == pytest.approx(np.sqrt(var) * 1.6448536, rel=0.05)


def test_reversed_pair_is_symmetric(fitted):
    res, _, R = fitted
    a = draw_max_statistics(R, res.theta11, Explicit([(1, 2)]), res.scale_np, 100, 0)
    b = draw_max_statistics(R, res.theta11, Explicit([(2, 1)]), res.scale_np, 100, 0)
    np.testing.assert_allclose(a.draws, -b.draws, atol=1e-12)
    both = draw_max_statistics(R, res.theta11, Explicit([(1, 2), (2, 1)]), res.scale_np, 100, 0)
    np.testing.assert_allclose(both.draws, np.abs(a.draws), atol=1e-12)


def test_profile_examples():
    from conftest import dataset_from

    data = dataset_from(2, [(0, 1)], [[1]])
    R = residual_profile(np.zeros(2), data)
    np.testing.assert_allclose(R, [[0.5, -0.5]])
    _, data = random_dataset(9, 0.6, 4, 3)
    np.testing.assert_allclose(residual_profile(np.ones(9), data).sum(axis=1), 0, atol=1e-12)


def test_full_draws_are_nonnegative(fitted):
    res, _, R = fitted
    assert np.all(draw_max_statistics(R, res.theta11, Full(), res.scale_np, 500, 2).draws >= 0)


def test_decisions_invariant_to_density_scaling(fitted):
    """T and W share the sqrt(n p) factor, so the reject decision ignores it."""
    from rankinfer.inference import topk_statistic

    res, data, R = fitted
    for scale in (res.scale_np, 3.7 * res.scale_np):
        d = draw_max_statistics(R, res.theta11, Star(0), scale, 400, 1)
        t = topk_statistic(res, 0, 3) * np.sqrt(scale / res.scale_np)
        decision = (t > quantile_cw(d, 0.1), p_value(d, t))
        if scale == res.scale_np:
            first = decision
    assert decision == first


def test_draws_are_deterministic_per_seed(fitted):
    res, _, R = fitted
    a = draw_max_statistics(R, res.theta11, Star(1), res.scale_np, 100, (4, 1))
    b = draw_max_statistics(R, res.theta11, Star(1), res.scale_np, 100, (4, 1))
    c = draw_max_statistics(R, res.theta11, Star(1), res.scale_np, 100, (4, 2))
    assert np.array_equal(a.draws, b.draws)
    assert not np.array_equal(a.draws, c.draws)
    assert a.seed == (4, 1)


def test_full_dominates_star(fitted):
    res, _, R = fitted
    full = draw_max_statistics(R, res.theta11, Full(), res.scale_np, 300, 8)
    star = draw_max_statistics(R, res.theta11, Star(3), res.scale_np, 300, 8)
    assert np.all(full.draws >= star.draws - 1e-12)


def test_quantile_is_order_statistic():
    d = _draws(np.arange(1, 101))
    assert quantile_cw(d, 0.05) == 95
    assert quantile_cw(d, 0.5) == 50
    assert quantile_cw(d, 0.999) == 1
    with pytest.raises(AlphaOutOfRange):
        quantile_cw(d, 1.0)


def test_quantile_is_monotone_in_alpha():
    d = _draws(np.random.default_rng(0).normal(size=500))
    qs = [quantile_cw(d, a) for a in np.linspace(0.01, 0.99, 50)]
    assert np.all(np.diff(qs) <= 0)


def test_constant_draws_and_median_convention():
    d = _draws([2.5] * 10)
    assert all(quantile_cw(d, a) == 2.5 for a in (0.01, 0.5, 0.9))
    assert quantile_cw(_draws([4.0, 1.0, 3.0, 2.0]), 0.5) == 2.0


def test_p_value_quantile_duality():
    rs = np.random.default_rng(5)
    for _ in range(20):
        d = _draws(rs.normal(size=rs.integers(1, 300)))
        for a in (0.01, 0.05, 0.3):
            assert p_value(d, quantile_cw(d, a)) <= a + 2 / (d.B + 1)


def test_p_value_nonincreasing_in_t():
    d = _draws(np.random.default_rng(1).normal(size=200))
    ps = [p_value(d, t) for t in np.linspace(-4, 4, 81)]
    assert np.all(np.diff(ps) <= 0)


def test_p_value_tail_mass():
    d = _draws([1.0, 2.0, 3.0, 4.0])
    assert p_value(d, 2.0) == pytest.approx((1 + 3) / 5)
    assert p_value(d, 10.0) == pytest.approx(1 / 5)
    assert p_value(d, -1.0) == 1.0


def test_empty_and_invalid_edge_sets(fitted):
    res, _, R = fitted
    with pytest.raises(EmptyEdgeSet):
        draw_max_statistics(R, res.theta11, Explicit([]), res.scale_np, 10, 0)
    with pytest.raises(EmptyEdgeSet):
        draw_max_statistics(np.zeros((3, 1)), np.zeros((1, 1)), Full(), 1.0, 10, 0)
    with pytest.raises(ValueError):
        draw_max_statistics(R, res.theta11, Star(99), res.scale_np, 10, 0)
    with pytest.raises(ValueError):
        draw_max_statistics(R, res.theta11, Explicit([(1, 1)]), res.scale_np, 10, 0)
