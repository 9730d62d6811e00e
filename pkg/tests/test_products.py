import math

import numpy as np
import pytest

from tontine import pool_math, products
from tontine.errors import DivergenceError, DomainError
from tontine.mortality import MortalityBasis, survival_probability
from tontine.pool_math import PoolSpec
from tontine.quadrature import EconomicBasis, QuadratureRule, discounted_integral


def test_fair_annuity_rate_example(payout_basis, econ4):
    c0 = products.fair_annuity_rate(MortalityBasis(m=88.721, b=10.0, x=65.0), econ4)
    assert c0 == pytest.approx(0.0752, abs=2e-4)
    assert c0 > econ4.r


def test_annuity_certain():
    immortal = MortalityBasis(m=1e6, b=10.0, x=65.0)
    r, T = 0.05, 20.0
    rule = QuadratureRule(horizon=T)
    c0 = products.fair_annuity_rate(immortal, EconomicBasis(r), rule)
    assert c0 == pytest.approx(r / -math.expm1(-r * T), rel=1e-9)


def test_annuity_utility_gamma_two(payout_basis, econ4):
    # (1/(1-gamma)) A^gamma with A = 1 / c0.
    a = discounted_integral(lambda t: survival_probability(payout_basis, t), 0.04, payout_basis.horizon)
    assert products.annuity_utility(2.0, payout_basis, econ4) == pytest.approx(-a * a, rel=1e-10)
    assert products.annuity_utility(2.0, payout_basis, econ4) == pytest.approx(-176.84, abs=0.05)


def test_annuity_utility_log_case(payout_basis, econ4):
    c0 = products.fair_annuity_rate(payout_basis, econ4)
    assert products.annuity_utility(1.0, payout_basis, econ4) == pytest.approx(math.log(c0) / c0, rel=1e-12)
    loaded = EconomicBasis(0.04, 0.1)
    assert products.annuity_utility(1.0, payout_basis, loaded) == pytest.approx(
        (math.log(c0) + math.log(0.9)) / c0, rel=1e-12)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 5.0])
def test_loaded_annuity_utility_decreases_in_loading(payout_basis, gamma):
    values = [products.annuity_utility(gamma, payout_basis, EconomicBasis(0.04, d)) for d in (0.0, 0.05, 0.2, 0.5)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_annuity_utility_rejects_bad_gamma(payout_basis, econ4):
    with pytest.raises(DomainError):
        products.annuity_utility(0.0, payout_basis, econ4)


@pytest.mark.parametrize("gamma, expected", [(1.0, 0.07520), (0.5, 0.07565), (9.0, 0.07081)])
def test_optimal_initial_rate(payout_basis, econ4, gamma, expected):
    d1 = products.optimal_tontine_initial_rate(PoolSpec(25, gamma), payout_basis, econ4)
    assert d1 == pytest.approx(expected, abs=1e-4)


def test_optimal_initial_rate_log_case_is_c0(payout_basis, econ4):
    assert products.optimal_tontine_initial_rate(PoolSpec(25, 1.0), payout_basis, econ4) == pytest.approx(
        products.fair_annuity_rate(payout_basis, econ4), rel=1e-14)


def test_payout_curve_age_95(payout_basis, econ4):
    curve = products.tontine_payout_curve("optimal", PoolSpec(25, 1.5), payout_basis, econ4, grid=[0.0, 30.0])
    assert curve.rates[1] == pytest.approx(0.01324, abs=1e-4)
    assert curve.rates[0] == curve.initial_rate


@pytest.mark.parametrize("kind", ["flat", "natural", "optimal"])
@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 9.0])
def test_budget_constraint(payout_basis, econ4, kind, gamma):
    curve = products.tontine_payout_curve(kind, PoolSpec(25, gamma), payout_basis, econ4)
    # Re-integrate independently: trapezoid on a fine grid from the exact rate.
    t = np.linspace(0, payout_basis.horizon, 20001)
    rates = np.array([curve.rate_at(s) for s in t])
    trap = np.trapezoid(np.exp(-0.04 * t) * rates, t)
    if kind == "flat":
        trap += math.exp(-0.04 * payout_basis.horizon)  # perpetuity tail r * int_H^inf e^{-rt}
    assert trap == pytest.approx(1.0, abs=1e-6)
    assert curve.budget() == pytest.approx(1.0, abs=1e-9)


def test_natural_curve_proportional_to_survival(payout_basis, econ4):
    curve = products.tontine_payout_curve("natural", None, payout_basis, econ4)
    assert np.allclose(curve.rates / curve.rates[0], curve.survival, rtol=1e-14, atol=0)
    c0 = products.fair_annuity_rate(payout_basis, econ4)
    i = int(np.argmin(abs(curve.grid - 15.0)))
    assert curve.rates[i] == pytest.approx(curve.survival[i] * c0, rel=1e-14)


def test_flat_curve_is_rate(payout_basis, econ4):
    curve = products.tontine_payout_curve("flat", None, payout_basis, econ4)
    assert np.all(curve.rates == 0.04)


def test_optimal_curve_pointwise(payout_basis, econ4):
    pool = PoolSpec(25, 4.0)
    curve = products.tontine_payout_curve("optimal", pool, payout_basis, econ4)
    for i in range(0, len(curve.grid), 37):
        p = curve.survival[i]
        assert curve.rates[i] == pytest.approx(curve.initial_rate * pool_math.beta(pool, p) ** 0.25, rel=1e-9, abs=1e-300)


def test_log_optimal_equals_natural(payout_basis, econ4):
    opt = products.tontine_payout_curve("optimal", PoolSpec(25, 1.0), payout_basis, econ4)
    nat = products.tontine_payout_curve("natural", None, payout_basis, econ4)
    assert np.allclose(opt.rates, nat.rates, rtol=0, atol=1e-9)


def test_curve_errors(payout_basis, econ4):
    with pytest.raises(DomainError):
        products.tontine_payout_curve("weird", None, payout_basis, econ4)
    with pytest.raises(DomainError):
        products.tontine_payout_curve("optimal", None, payout_basis, econ4)
    with pytest.raises(DomainError):
        products.tontine_payout_curve("natural", None, payout_basis, econ4, grid=[1.0, 0.5])


def test_interpolation(payout_basis, econ4):
    curve = products.tontine_payout_curve("natural", None, payout_basis, econ4)
    mid = 0.5 * (curve.grid[10] + curve.grid[11])
    assert curve.interpolate(mid) == pytest.approx(0.5 * (curve.rates[10] + curve.rates[11]))
    assert curve.interpolate(mid) == pytest.approx(curve.rate_at(mid), rel=1e-5)


def test_curve_crossing_for_high_aversion(payout_basis, econ4):
    opt = products.tontine_payout_curve("optimal", PoolSpec(25, 3.0), payout_basis, econ4)
    nat = products.tontine_payout_curve("natural", None, payout_basis, econ4)
    ratio = opt.rates[: 600] / nat.rates[: 600]
    assert ratio[1] < 1.0 and ratio[-1] > 1.0
    flips = np.sum(np.diff(np.sign(ratio - 1.0)) != 0)
    assert flips == 1


def test_lagrange_multiplier_identity(payout_basis, econ4):
    pool = PoolSpec(25, 2.5)
    d1 = products.optimal_tontine_initial_rate(pool, payout_basis, econ4)
    lam = d1 ** -pool.gamma
    for p in (0.9, 0.5, 0.1, 0.01):
        d = d1 * pool_math.beta(pool, p) ** (1 / pool.gamma)
        assert d ** -pool.gamma * pool_math.beta(pool, p) == pytest.approx(lam, rel=1e-9)


def test_tontine_below_annuity_example():
    basis = MortalityBasis(m=87.25, b=9.5, x=60.0)
    econ = EconomicBasis(0.03)
    assert products.tontine_utility(PoolSpec(20, 2.0), basis, econ) < products.annuity_utility(2.0, basis, econ)


def test_large_pool_tontine_approaches_annuity(loading_basis, econ3):
    u_ot = products.tontine_utility(PoolSpec(100_000, 2.0), loading_basis, econ3)
    u_a = products.annuity_utility(2.0, loading_basis, econ3)
    assert u_ot == pytest.approx(u_a, rel=1e-3)


def test_log_single_member_utility(payout_basis, econ4):
    c0 = products.fair_annuity_rate(payout_basis, econ4)

    def f(t):
        p = survival_probability(payout_basis, t)
        return p * math.log(c0 * p) if p > 0 else 0.0

    expected = discounted_integral(f, 0.04, payout_basis.horizon)
    assert products.tontine_utility(PoolSpec(1, 1.0), payout_basis, econ4) == pytest.approx(expected, rel=1e-9)


def test_natural_equals_optimal_in_log_case(loading_basis, econ3):
    pool = PoolSpec(100, 1.0)
    assert products.natural_tontine_utility(pool, loading_basis, econ3) == products.tontine_utility(pool, loading_basis, econ3)


def test_natural_utility_gamma_two(loading_basis, econ3):
    pool = PoolSpec(100, 2.0)
    u_n = products.natural_tontine_utility(pool, loading_basis, econ3)
    assert math.isfinite(u_n)
    assert u_n <= products.tontine_utility(pool, loading_basis, econ3)


def test_natural_utility_diverges_above_two(loading_basis, econ3):
    with pytest.raises(DivergenceError):
        products.natural_tontine_utility(PoolSpec(100, 2.5), loading_basis, econ3)
    with pytest.raises(DivergenceError):
        products.certainty_equivalent_ratio(PoolSpec(100, 2.5), loading_basis, econ3)


def test_indifference_loading_examples(loading_basis, econ3):
    assert 1e4 * products.indifference_loading(PoolSpec(100, 1.0), loading_basis, econ3) == pytest.approx(27.4, abs=0.3)
    assert 1e4 * products.indifference_loading(PoolSpec(20, 9.0), loading_basis, econ3) == pytest.approx(753.6, abs=5)
    age50 = MortalityBasis(m=87.25, b=9.5, x=50.0)
    assert 100 * products.indifference_loading(PoolSpec(100, 2.0), age50, econ3) == pytest.approx(0.3377, abs=0.002)


def test_indifference_loading_vanishes_for_huge_pool(loading_basis, econ3):
    assert products.indifference_loading(PoolSpec(1_000_000, 2.0), loading_basis, econ3) < 1e-5


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 4.0])
def test_indifference_loading_equates_utilities(loading_basis, gamma):
    # Loading the annuity by delta must reproduce the tontine utility.
    pool = PoolSpec(50, gamma)
    econ = EconomicBasis(0.03)
    delta = products.indifference_loading(pool, loading_basis, econ)
    loaded = products.annuity_utility(gamma, loading_basis, EconomicBasis(0.03, delta))
    assert loaded == pytest.approx(products.tontine_utility(pool, loading_basis, econ), rel=1e-8)


@pytest.mark.parametrize("gamma", [1.25, 1.5, 2.0])
@pytest.mark.parametrize("n", [2, 20, 100])
def test_loading_bound(loading_basis, econ3, gamma, n):
    delta = products.indifference_loading(PoolSpec(n, gamma), loading_basis, econ3)
    assert 0 < delta < products.loading_bound(PoolSpec(n, gamma), loading_basis, econ3)


def test_certainty_equivalent_examples(econ3):
    age30 = MortalityBasis(m=87.25, b=9.5, x=30.0)
    assert products.certainty_equivalent_ratio(PoolSpec(100, 1.0), age30, econ3) == 1.0
    assert products.certainty_equivalent_ratio(PoolSpec(100, 0.5), age30, econ3) == pytest.approx(1.000018, abs=5e-6)


@pytest.mark.parametrize("gamma", [0.5, 1.5, 2.0])
def test_certainty_equivalent_definition(loading_basis, econ3, gamma):
    # Depositing Gamma in the natural tontine scales its utility by Gamma^(1-gamma).
    pool = PoolSpec(20, gamma)
    ce = products.certainty_equivalent_ratio(pool, loading_basis, econ3)
    u_n = products.natural_tontine_utility(pool, loading_basis, econ3)
    u_ot = products.tontine_utility(pool, loading_basis, econ3)
    assert ce >= 1.0
    assert ce ** (1 - gamma) * u_n == pytest.approx(u_ot, rel=1e-9)


def test_certainty_equivalent_tends_to_one(loading_basis, econ3):
    values = [products.certainty_equivalent_ratio(PoolSpec(n, 2.0), loading_basis, econ3) - 1 for n in (10, 100, 1000)]
    assert values[0] > values[1] > values[2] > 0


@pytest.mark.parametrize("offset", [-1e-6, 1e-6])
def test_gamma_continuity(loading_basis, econ3, offset):
    near, at = PoolSpec(100, 1.0 + offset), PoolSpec(100, 1.0)
    for fn in (products.optimal_tontine_initial_rate, products.indifference_loading, products.certainty_equivalent_ratio):
        assert fn(near, loading_basis, econ3) == pytest.approx(fn(at, loading_basis, econ3), rel=1e-4)
    a = products.tontine_payout_curve("optimal", near, loading_basis, econ3, grid=[0.0, 20.0, 40.0])
    b = products.tontine_payout_curve("optimal", at, loading_basis, econ3, grid=[0.0, 20.0, 40.0])
    assert np.allclose(a.rates, b.rates, rtol=1e-4)


def test_utility_report(loading_basis):
    econ = EconomicBasis(0.03, 0.01)
    report = products.utility_report(PoolSpec(100, 2.0), loading_basis, econ)
    assert report.u_optimal_tontine < report.u_annuity
    assert report.u_loaded_annuity < report.u_annuity
    assert report.u_natural_tontine <= report.u_optimal_tontine
    assert products.utility_report(PoolSpec(100, 3.0), loading_basis, econ).u_natural_tontine is None


def test_subjective_equals_objective(payout_basis, econ4):
    pool = PoolSpec(25, 2.0)
    subj = products.subjective_tontine_payout(pool, payout_basis, payout_basis, econ4)
    opt = products.tontine_payout_curve("optimal", pool, payout_basis, econ4)
    assert np.allclose(subj.rates, opt.rates, rtol=1e-9, atol=1e-15)
    assert subj.budget() == pytest.approx(1.0, abs=1e-6)


def test_healthier_subjective_back_loads(payout_basis, econ4):
    pool = PoolSpec(25, 2.0)
    healthy = MortalityBasis(m=93.72, b=10.0, x=65.0)
    grid = np.arange(0, 40, 0.5)
    subj = products.subjective_tontine_payout(pool, payout_basis, healthy, econ4, grid)
    opt = products.tontine_payout_curve("optimal", pool, payout_basis, econ4, grid)
    ratio = subj.rates / opt.rates
    assert np.all(np.diff(ratio) > 0)
    assert subj.budget() == pytest.approx(1.0, abs=1e-6)


def test_subjective_annuity_budget(payout_basis, econ4):
    healthy = MortalityBasis(m=93.72, b=10.0, x=65.0)

    def cash(t):
        p = survival_probability(payout_basis, t)
        return p * float(products.subjective_annuity_payout(2.0, payout_basis, healthy, econ4, t))

    assert discounted_integral(cash, 0.04, payout_basis.horizon, 1e-9) == pytest.approx(1.0, abs=1e-6)
    c = products.subjective_annuity_payout(2.0, payout_basis, healthy, econ4, np.array([0.0, 10.0, 20.0]))
    assert c[0] < c[1] < c[2]


def test_subjective_requires_shared_age(payout_basis, econ4):
    with pytest.raises(DomainError):
        products.subjective_tontine_payout(PoolSpec(5, 2.0), payout_basis, MortalityBasis(88, 10, x=60), econ4)


def test_natural_utility_young_entry_gamma_two():
    # Survival underflows before the age cap; the gamma = 2 integrand keeps its 1/n limit.
    young = MortalityBasis(m=50.0, b=10.0, x=10.0)
    ce = products.certainty_equivalent_ratio(PoolSpec(100, 2.0), young, EconomicBasis(0.03))
    assert 1.0 < ce < 1.01
