"""Life annuities and tontines: payout functions, utilities and loadings.

Conventions used throughout:

* ``A = int exp(-r t) tpx dt`` is the annuity factor, so the fair annuity
  pays ``c0 = 1 / A`` per survivor for life.
* ``J = int exp(-r t) beta(tpx) ** (1/gamma) dt``; the optimal tontine pays
  ``D(1) = 1 / J`` to the pool at time zero.
* Utilities are raw CRRA values, ``c ** (1 - gamma) / (1 - gamma)`` or
  ``log c`` when gamma is 1.

The Euler-Lagrange multiplier is eliminated analytically: ``D(1) ** -gamma``
plays its role, so no root finding is needed anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import pool_math
from .errors import DivergenceError, DomainError
from .mortality import MortalityBasis, survival_probability
from .pool_math import PoolSpec
from .quadrature import DEFAULT_RULE, EconomicBasis, QuadratureRule, discounted_integral

KINDS = ("flat", "natural", "optimal", "subjective_optimal")
DEFAULT_STEP = 1.0 / 12.0


# Absolute error allowed on the small differences J - A, C - A and the log
# gap.  They are a few times 1e-9 for pools near a million, where the
# integrand itself carries ~1e-16 rounding; relative to A (~20) this is
# far below any reported digit.
GAP_ABS_TOL = 1e-15


def _integrate(f, basis: MortalityBasis, econ: EconomicBasis, rule: QuadratureRule,
               abs_tol: float = 0.0) -> float:
    return rule.integrate(f, econ.r, basis.horizon, abs_tol)


def _check_gamma(gamma: float) -> None:
    if not gamma > 0:
        raise DomainError(f"gamma must be positive, got {gamma}")


def annuity_factor(basis: MortalityBasis, econ: EconomicBasis, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Price of a unit continuous life annuity, ``int exp(-r t) tpx dt``."""
    return _integrate(lambda t: survival_probability(basis, t), basis, econ, rule)


def fair_annuity_rate(basis: MortalityBasis, econ: EconomicBasis, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Constant payout ``c0`` per survivor bought by one unfunded dollar."""
    return 1.0 / annuity_factor(basis, econ, rule)


def annuity_utility(
    gamma: float,
    basis: MortalityBasis,
    econ: EconomicBasis,
    rule: QuadratureRule = DEFAULT_RULE,
) -> float:
    """Lifetime utility of the optimal annuity after deducting ``econ.loading``."""
    _check_gamma(gamma)
    c0 = fair_annuity_rate(basis, econ, rule)
    keep = 1.0 - econ.loading
    if abs(gamma - 1.0) <= pool_math.LOG_CASE_TOL:
        return (math.log(c0) + math.log(keep)) / c0
    return c0 ** (-gamma) * keep ** (1.0 - gamma) / (1.0 - gamma)


def optimal_integral(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                     rule: QuadratureRule = DEFAULT_RULE) -> float:
    """``J``, the reciprocal of the optimal tontine's initial payout rate."""
    if pool.is_log:
        return annuity_factor(basis, econ, rule)
    inv_g = 1.0 / pool.gamma
    return _integrate(lambda t: pool_math.beta(pool, survival_probability(basis, t)) ** inv_g,
                      basis, econ, rule)


def _optimal_gap(pool, basis, econ, rule) -> float:
    # J - A, integrated directly so that it keeps full relative precision.
    return _integrate(lambda t: pool_math.optimal_excess(pool, survival_probability(basis, t)),
                      basis, econ, rule, GAP_ABS_TOL)


def _natural_gap(pool, basis, econ, rule) -> float:
    return _integrate(lambda t: pool_math.natural_excess(pool, survival_probability(basis, t)),
                      basis, econ, rule, GAP_ABS_TOL)


def _log_gap(pool, basis, econ, rule) -> float:
    # int exp(-rt) p (E[log(N/n)] - log p) dt, positive for n >= 2.
    def f(t):
        p = survival_probability(basis, t)
        if p == 0.0:
            return 0.0
        return p * pool_math.expected_log_excess(pool.n, p)

    return _integrate(f, basis, econ, rule, GAP_ABS_TOL)


def optimal_tontine_initial_rate(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                                 rule: QuadratureRule = DEFAULT_RULE) -> float:
    """``D(1)``: the optimal tontine's payout rate to the pool at time zero."""
    return 1.0 / optimal_integral(pool, basis, econ, rule)


def tontine_utility(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                    rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Lifetime utility of the optimal tontine for a subscriber."""
    if pool.is_log:
        c0 = fair_annuity_rate(basis, econ, rule)

        def f(t):
            p = survival_probability(basis, t)
            if p == 0.0:
                return 0.0
            return p * (math.log(c0 * p) - pool_math.expected_log_share(pool.n, p))

        return _integrate(f, basis, econ, rule)
    g = pool.gamma
    return optimal_integral(pool, basis, econ, rule) ** g / (1.0 - g)


def natural_tontine_utility(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                            rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Lifetime utility of the natural tontine ``d(t) = c0 tpx``.

    Raises:
        DivergenceError: for gamma above 2, where the utility is infinite.
    """
    g = pool.gamma
    if g > 2.0:
        raise DivergenceError(f"natural tontine utility diverges for gamma={g} > 2")
    if pool.is_log:
        return tontine_utility(pool, basis, econ, rule)
    c0 = fair_annuity_rate(basis, econ, rule)
    inner = _integrate(
        lambda t: (lambda p: p + pool_math.natural_excess(pool, p))(survival_probability(basis, t)),
        basis, econ, rule,
    )
    return c0 ** (1.0 - g) / (1.0 - g) * inner


def indifference_loading(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                         rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Annuity loading at which the loaded annuity and optimal tontine tie.

    Closed form: ``1 - (c0 J) ** (gamma / (1 - gamma))``, or
    ``1 - exp(c0 U) / c0`` in the logarithmic case.  ``econ.loading`` is
    ignored.
    """
    _check_gamma(pool.gamma)
    c0 = fair_annuity_rate(basis, econ, rule)
    if pool.is_log:
        return -math.expm1(-c0 * _log_gap(pool, basis, econ, rule))
    g = pool.gamma
    log_c0_j = math.log1p(c0 * _optimal_gap(pool, basis, econ, rule))
    return -math.expm1(g / (1.0 - g) * log_c0_j)


def loading_bound(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                  rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Upper bound ``(c0 / r - 1) / n`` on the loading, valid for 1 < gamma <= 2."""
    return (fair_annuity_rate(basis, econ, rule) / econ.r - 1.0) / pool.n


def loading_asymptote(gamma: float, basis: MortalityBasis, econ: EconomicBasis,
                      rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Large-pool limit of ``n * delta``: ``(gamma / 2) (c0 / r - 1)``."""
    return 0.5 * gamma * (fair_annuity_rate(basis, econ, rule) / econ.r - 1.0)


def certainty_equivalent_ratio(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                               rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Deposit into a natural tontine that matches $1 in the optimal one.

    Evaluated as ``exp((gamma a - c) / (1 - gamma))`` with
    ``a = log(J / A)`` and ``c = log(C / A)``, where ``C`` is the natural
    tontine's utility integral.  Exactly 1 in the logarithmic case.

    Raises:
        DivergenceError: for gamma above 2.
    """
    g = pool.gamma
    if g > 2.0:
        raise DivergenceError(f"certainty equivalent ratio diverges for gamma={g} > 2")
    if pool.is_log:
        return 1.0
    a_factor = annuity_factor(basis, econ, rule)
    a = math.log1p(_optimal_gap(pool, basis, econ, rule) / a_factor)
    c = math.log1p(_natural_gap(pool, basis, econ, rule) / a_factor)
    return math.exp((g * a - c) / (1.0 - g))


@dataclass(frozen=True)
class UtilityReport:
    """Utilities of the four products for one (pool, basis, economy)."""

    u_annuity: float
    u_loaded_annuity: float
    u_optimal_tontine: float
    u_natural_tontine: Optional[float]
    gamma: float
    n: int
    basis: MortalityBasis
    econ: EconomicBasis


def utility_report(pool: PoolSpec, basis: MortalityBasis, econ: EconomicBasis,
                   rule: QuadratureRule = DEFAULT_RULE) -> UtilityReport:
    """Collect annuity, loaded annuity, optimal and natural tontine utilities.

    ``u_natural_tontine`` is ``None`` when it diverges (gamma > 2).
    """
    fair = EconomicBasis(econ.r, 0.0)
    try:
        u_nat = natural_tontine_utility(pool, basis, econ, rule)
    except DivergenceError:
        u_nat = None
    return UtilityReport(
        u_annuity=annuity_utility(pool.gamma, basis, fair, rule),
        u_loaded_annuity=annuity_utility(pool.gamma, basis, econ, rule),
        u_optimal_tontine=tontine_utility(pool, basis, econ, rule),
        u_natural_tontine=u_nat,
        gamma=pool.gamma,
        n=pool.n,
        basis=basis,
        econ=econ,
    )


@dataclass(frozen=True, eq=False)
class PayoutCurve:
    """A tontine payout rate per initial dollar, sampled on a time grid.

    ``rate_at`` re-evaluates the exact payout function, so the sampled
    ``rates`` are only needed for output and interpolation.
    """

    kind: str
    grid: np.ndarray
    rates: np.ndarray
    survival: np.ndarray
    basis: MortalityBasis
    econ: EconomicBasis
    pool: Optional[PoolSpec]
    initial_rate: float
    subjective: Optional[MortalityBasis] = field(default=None)

    @property
    def ages(self) -> np.ndarray:
        return self.basis.x + self.grid

    def rate_at(self, t: float) -> float:
        """Exact payout rate at time ``t``."""
        if self.kind == "flat":
            return self.initial_rate
        if t > self.basis.horizon:
            return 0.0
        p = survival_probability(self.basis, t)
        if self.kind == "natural":
            return self.initial_rate * p
        if self.kind == "optimal":
            return self.initial_rate * pool_math.beta(self.pool, p) ** (1.0 / self.pool.gamma)
        p_subj = survival_probability(self.subjective, t)
        return self.initial_rate * (p_subj * pool_math.theta(self.pool, p)) ** (1.0 / self.pool.gamma)

    def interpolate(self, t):
        """Linear interpolation of the sampled rates."""
        return np.interp(t, self.grid, self.rates)

    def budget(self, rule: QuadratureRule = DEFAULT_RULE) -> float:
        """``int exp(-r t) d(t) dt``; equals 1 for every correctly built curve.

        The flat curve pays in perpetuity; the others stop at the age cap.
        """
        horizon = math.inf if self.kind == "flat" else self.basis.horizon
        return discounted_integral(self.rate_at, self.econ.r, horizon, rule.rel_tol)


def default_grid(basis: MortalityBasis, step: float = DEFAULT_STEP) -> np.ndarray:
    """Monthly (by default) grid from 0 to the age cap."""
    count = int(math.floor(basis.horizon / step + 1e-9))
    return np.arange(count + 1) * step


def _grid(basis, grid):
    g = default_grid(basis) if grid is None else np.asarray(grid, dtype=float)
    if g.ndim != 1 or np.any(g < 0) or np.any(np.diff(g) <= 0):
        raise DomainError("grid must be a 1-d ascending array of times >= 0")
    return g


def tontine_payout_curve(
    kind: str,
    pool: Optional[PoolSpec],
    basis: MortalityBasis,
    econ: EconomicBasis,
    grid=None,
    rule: QuadratureRule = DEFAULT_RULE,
) -> PayoutCurve:
    """Build a flat, natural or optimal payout curve.

    Raises:
        DomainError: for an unknown kind, or ``kind="optimal"`` without a pool.
    """
    if kind not in ("flat", "natural", "optimal"):
        raise DomainError(f"unknown payout kind {kind!r}; use subjective_tontine_payout for subjective curves")
    if kind == "optimal" and pool is None:
        raise DomainError("an optimal payout curve needs a PoolSpec")
    t = _grid(basis, grid)
    surv = survival_probability(basis, t)
    if kind == "flat":
        d0 = econ.r
        rates = np.full_like(t, d0)
    elif kind == "natural":
        d0 = fair_annuity_rate(basis, econ, rule)
        rates = d0 * surv
    else:
        d0 = optimal_tontine_initial_rate(pool, basis, econ, rule)
        inv_g = 1.0 / pool.gamma
        rates = np.array([d0 * pool_math.beta(pool, p) ** inv_g for p in surv])
    if kind != "flat":
        rates = np.where(t > basis.horizon, 0.0, rates)
    return PayoutCurve(kind, t, rates, surv, basis, econ, pool if kind == "optimal" else None, d0)


def subjective_tontine_payout(
    pool: PoolSpec,
    objective: MortalityBasis,
    subjective: MortalityBasis,
    econ: EconomicBasis,
    grid=None,
    rule: QuadratureRule = DEFAULT_RULE,
) -> PayoutCurve:
    """Optimal tontine for a member whose own survival beliefs differ from the pool's.

    The payout is ``D(1,1) (p_subj theta(p_obj)) ** (1/gamma)``, normalised so
    the sponsor's budget holds under objective discounting.
    """
    if subjective.x != objective.x:
        raise DomainError("objective and subjective bases must share the entry age")
    inv_g = 1.0 / pool.gamma

    def shape(t):
        p = survival_probability(objective, t)
        return (survival_probability(subjective, t) * pool_math.theta(pool, p)) ** inv_g

    d0 = 1.0 / _integrate(shape, objective, econ, rule)
    t = _grid(objective, grid)
    rates = np.array([d0 * shape(s) for s in t])
    return PayoutCurve("subjective_optimal", t, rates, survival_probability(objective, t),
                       objective, econ, pool, d0, subjective)


def subjective_annuity_rate(gamma: float, objective: MortalityBasis, subjective: MortalityBasis,
                            econ: EconomicBasis, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Initial per-survivor payout ``c_S(0)`` of the subjectively optimal annuity."""
    _check_gamma(gamma)
    inv_g = 1.0 / gamma

    def f(t):
        p = survival_probability(objective, t)
        if p == 0.0:
            return 0.0
        return p * (survival_probability(subjective, t) / p) ** inv_g

    return 1.0 / _integrate(f, objective, econ, rule)


def subjective_annuity_payout(gamma: float, objective: MortalityBasis, subjective: MortalityBasis,
                              econ: EconomicBasis, t, rule: QuadratureRule = DEFAULT_RULE):
    """Per-survivor payout ``c_S(t) = c_S(0) (p_subj / p_obj) ** (1/gamma)``."""
    c_s0 = subjective_annuity_rate(gamma, objective, subjective, econ, rule)
    p = np.asarray(survival_probability(objective, t), dtype=float)
    q = np.asarray(survival_probability(subjective, t), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p > 0, c_s0 * (q / np.where(p > 0, p, 1.0)) ** (1.0 / gamma), 0.0)
    return float(out) if out.ndim == 0 else out
