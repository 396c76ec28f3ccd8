import math

import numpy as np
import pytest
from scipy.integrate import quad

from stein_hellinger import pairs as P
from stein_hellinger.bounds import Bn_value
from stein_hellinger.errors import ConfigError, DomainError
from stein_hellinger.hermite import HermiteSeries, series_l2_norm_sq
from stein_hellinger.numerics import RngStream
from stein_hellinger.ustat import chaos_kernel, custom_kernel, kernel_l4_sq, standardize, u_value, u_values


@pytest.fixture(scope="module")
def chaos(beta55):
    return chaos_kernel(beta55)


@pytest.fixture(scope="module")
def std(beta55, chaos):
    return standardize(chaos, beta55)[1]


def test_g1_examples(beta55, chaos):
    assert P.g1_value(beta55, chaos, np.full(5, 1.5)) == pytest.approx(0, abs=1e-15)
    assert P.g1_value(beta55, chaos, [1, 1, 2, 2]) == pytest.approx(0, abs=1e-15)
    x = beta55.sample_matrix((30,), RngStream(1).generator())
    assert P.g1_value(beta55, chaos, x) == pytest.approx(1.5 * math.sqrt(30) * (x.mean() - 1.5))


def test_pair_identity_when_replacement_equals(beta55, chaos):
    x = np.array([1.2, 1.4, 1.9])
    p = P.make_pair(beta55, chaos, x, 2, 1.4)
    assert p.f_value == 0 and p.delta_g == 0


def test_draw_pair_structure_and_antisymmetry(beta55, chaos):
    x = beta55.sample_matrix((12,), RngStream(2).generator())
    for i in range(1000):
        p = P.draw_pair(beta55, chaos, x, RngStream(3, i))
        mask = np.arange(12) != p.index_I - 1
        assert np.array_equal(p.data_t[mask], x[mask]) and p.data_t[p.index_I - 1] == p.replacement
        assert p.f_value == 0.5 * p.delta_g + p.delta_g1
        assert P.pair_function(beta55, chaos, p.data, p.data_t) == -P.pair_function(beta55, chaos, p.data_t, p.data)


def test_small_pair_by_double_sum(beta55, chaos):
    x = np.array([1.0, 1.5, 2.0])
    p = P.make_pair(beta55, chaos, x, 2, 1.0)
    mu2 = 2.25
    ds = lambda v: sum(v[i] * v[j] - mu2 for i in range(3) for j in range(3) if i != j) / (math.sqrt(3) * 2)
    assert p.delta_g == pytest.approx(ds(p.data_t) - ds(x), abs=1e-14)
    g1 = lambda v: sum(1.5 * vi - mu2 for vi in v) / math.sqrt(3)
    assert p.delta_g1 == pytest.approx(g1(p.data_t) - g1(x), abs=1e-14)


def test_conditional_F_mean_exact(beta55, std):
    X = beta55.sample_matrix((1000, 50), RngStream(4).generator())
    m = P.conditional_F_mean(beta55, std, X)
    assert np.abs(50 * m + u_values(std, X)).max() <= 1e-12
    assert P.conditional_F_mean(beta55, std, np.full(7, 1.5)) == pytest.approx(0, abs=1e-15)


def test_conditional_moments_nested_quadrature(beta55, std):
    # independent oracle: average over I and adaptive quadrature over the replacement
    x = np.array([1.2, 1.45, 1.8])
    n = 3
    def m(k):
        tot = 0.0
        for I in range(1, n + 1):
            f = lambda y: (lambda p: p.f_value * p.delta_g ** (k - 1))(P.make_pair(beta55, std, x, I, y)) * beta55.pdf(y)
            tot += quad(f, 1, 2, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        return tot / n
    assert P.conditional_F_mean(beta55, std, x) == pytest.approx(m(1), abs=1e-10)
    assert P.conditional_FdeltaG_mean(beta55, std, x) == pytest.approx(n / 2 * m(2), abs=1e-10)
    for k in (3, 4, 5):
        assert P.conditional_higher_moment(beta55, std, x, k) == pytest.approx(n * m(k), abs=1e-10)


def test_closed_form_matches_quadrature_path(beta55, std):
    X = beta55.sample_matrix((6, 20), RngStream(5).generator())
    a = P.pair_moments(beta55, std, X, 8, "closed")
    b = P.pair_moments(beta55, std, X, 8, "quadrature")
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-15)
    _, cs = standardize(custom_kernel(beta55, lambda x, y: x * y), beta55)
    np.testing.assert_allclose(P.pair_moments(beta55, cs, X, 8), a, rtol=1e-9, atol=1e-15)


def test_closed_form_needs_chaos(beta55):
    k = custom_kernel(beta55, lambda x, y: x * y)
    with pytest.raises(ConfigError):
        P.pair_moments(beta55, k, np.full(4, 1.5), 2, "closed")


def test_custom_kernel_identity(beta55):
    # a genuinely non-product kernel
    _, k = standardize(custom_kernel(beta55, lambda x, y: np.sin(3 * x * y) + x + y), beta55)
    X = beta55.sample_matrix((20, 15), RngStream(6).generator())
    m = P.pair_moments(beta55, k, X, 1)[:, 0]
    np.testing.assert_allclose(15 * m, -u_values(k, X), atol=1e-11)


def test_second_claim_mean_decomposition(beta55, std):
    n, reps = 100, 100_000
    vals = np.concatenate([P.conditional_FdeltaG_mean(beta55, std, beta55.sample_matrix((10_000, n), RngStream(7, b).generator()))
                           for b in range(reps // 10_000)])
    m = beta55.moments
    c2 = std.scale**2
    ex2 = m.var + m.mean**2
    Eu2, Eu12, u22 = c2 * ex2**2, c2 * m.mean**2 * ex2, c2 * m.mean**4
    expected = 2 / (n - 1) * (Eu2 - Eu12) + 2 * ((n - 2) / (n - 1) + 1) * (Eu12 - u22)
    assert abs(vals.mean() - expected) <= 4 * vals.std() / math.sqrt(reps)


@pytest.mark.parametrize("n", [25, 100])
def test_second_claim_below_Bn(beta55, chaos, n):
    rep = P.pair_moment_report(beta55, chaos, n, 2000, RngStream(8))
    assert rep.claim2_l2 <= rep.claim2_bound_Bn
    assert rep.claim2_bound_Bn == pytest.approx(Bn_value(n, kernel_l4_sq(beta55, standardize(chaos, beta55)[1])))
    assert rep.claim1_residual <= 1e-12


def test_report_c_t(beta55, chaos):
    rep = P.pair_moment_report(beta55, chaos, 100, 500, RngStream(9), t=0.3)
    R = standardize(chaos, beta55)[1].bound_R
    kappa = R * R / 10
    assert rep.kappa == pytest.approx(kappa)
    assert rep.c_t == pytest.approx(math.sqrt(kappa * (1 - math.exp(-0.6))))


def test_higher_moment_bound_formula():
    n, R, c = 100, 2.0, 0.5
    assert P.higher_moment_bound(4, n, R, c) == pytest.approx(16 * 3 * R**4 / (2 * n))
    assert P.higher_moment_bound(6, n, R, c) == pytest.approx(64 * 3 * c**2 * R**4 / (2 * n))
    assert P.higher_moment_bound(3, n, R, c) == pytest.approx(8 * 3 * R**3 / (2 * n) * (1 + math.sqrt(3 / 99)))


def test_higher_moment_range(beta55, std):
    with pytest.raises(ConfigError):
        P.conditional_higher_moment(beta55, std, np.full(5, 1.4), 13)
    with pytest.raises(ConfigError):
        P.conditional_higher_moment(beta55, std, np.full(5, 1.4), 2)


def test_degenerate_replacement_moment(beta55, std):
    x = np.array([1.2, 1.4, 1.9, 1.6])
    for I in range(1, 5):
        p = P.make_pair(beta55, std, x, I, x[I - 1])
        assert p.f_value * p.delta_g**2 == 0


def test_admissible_t():
    assert P.admissible_t(100) == pytest.approx(-0.5 * math.log(0.9))
    with pytest.raises(DomainError):
        P.admissible_t(100, 10.0)


def test_tau_preconditions(beta55, std):
    x = beta55.sample_matrix((100,), RngStream(10).generator())
    with pytest.raises(DomainError):
        P.tau_tilde(beta55, std, x, 0.05, None, 0.3)
    with pytest.raises(ConfigError):
        P.tau_tilde(beta55, std, x, 0.2, None, 0.3, K=31)


def test_tau_trivial_cases(beta55, std):
    x = beta55.sample_matrix((100,), RngStream(11).generator())
    r0 = P.tau_tilde(beta55, std, x, 0.2, 0.0, 0.7)
    assert r0 == {"value": 0.0, "tail_bound": 0.0}
    big = P.tau_tilde(beta55, std, x, 40.0, None, 0.7)
    assert abs(big["value"]) < 1e-15


def test_tau_first_coefficient(beta55, std):
    x = beta55.sample_matrix((100,), RngStream(12).generator())
    t = 0.3
    s = P.tau_series(beta55, std, x, t)
    expected = 100 * math.exp(-t) / math.sqrt(1 - math.exp(-2 * t)) * P.conditional_F_mean(beta55, std, x)
    assert s.coefficients[0] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_tau_truncation_within_tail_bound(beta55, std, seed):
    n = 100
    x = beta55.sample_matrix((n,), RngStream(13, seed).generator())
    t = P.admissible_t(n)
    s20 = P.tau_series(beta55, std, x, t, K=20)
    s30 = P.tau_series(beta55, std, x, t, K=30)
    s25 = P.tau_series(beta55, std, x, t, K=25)
    z = np.linspace(-3, 3, 61)
    # L2 distance between truncations is bounded by the K=20 tail
    diff = HermiteSeries(tuple(np.subtract(s30.coefficients, s20.coefficients + (0.0,) * 10)))
    assert math.sqrt(series_l2_norm_sq(diff)) <= s20.declared_tail_bound
    assert s25.declared_tail_bound <= s20.declared_tail_bound
    assert np.all(np.isfinite(s25(z) - s20(z)))


def test_geometric_majorant_finite_at_admissible_t():
    for n in (100, 400, 1600):
        t = P.admissible_t(n)
        assert math.isfinite(P.geometric_majorant(n, 1.0, t))
        assert P.geometric_majorant(n, 1.0, t) > P.geometric_majorant(n, 1.0, t + 1)


def test_verify_tau_zero_mean_s_zero(beta55, chaos):
    res = P.verify_tau_zero_mean(beta55, chaos, 100, 0.2, 500, RngStream(14), s=0.0)
    assert all(r.estimate == 0.0 and r.passed for r in res)


def test_verify_tau_zero_mean_small(beta55, chaos):
    res = P.verify_tau_zero_mean(beta55, chaos, 100, [0.2, 0.7], 5000, RngStream(15))
    assert len(res) == 6 and all(r.passed for r in res)


def test_exchangeability(beta55, chaos):
    rows = P.exchangeability_check(beta55, chaos, 30, 50_000, RngStream(16))
    for _, diff, se in rows:
        assert abs(diff) <= 4 * se
