"""Property suites for the pool functionals and product theorems.

Each suite sweeps a parameter grid and checks one inequality or identity.
``grid="small"`` is a quick subset for smoke runs; ``grid="full"`` is the
reference grid.  ``inject_fault`` negates one suite's check so the harness
itself can be tested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import pool_math, products
from .errors import DomainError
from .mortality import MortalityBasis
from .pool_math import PoolSpec
from .quadrature import EconomicBasis

GRIDS = ("small", "full")

POOL_SIZES = (2, 5, 25, 100, 1000)
POOL_GAMMAS = (0.25, 0.5, 1.0, 1.5, 2.0, 4.0, 9.0, 25.0)
PRODUCT_SIZES = (2, 20, 100, 1000)
PRODUCT_GAMMAS = (0.5, 1.0, 2.0, 9.0)
LOADING_GAMMAS = (1.25, 1.5, 2.0)
PRODUCT_AGES = (30.0, 60.0, 65.0, 80.0)
RECIPROCAL_SIZES = (1, 2, 5, 25, 100, 1000, 5000)

# Basis and rate of the loading tables.
REFERENCE_BASIS = dict(m=87.25, b=9.5)
REFERENCE_RATE = 0.03


@dataclass
class SuiteResult:
    """Outcome of a single property suite."""

    name: str
    grid: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.cases > 0 and not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: {self.cases - len(self.failures)}/{self.cases} cases [{self.grid}]"
        if self.failures:
            text += f"; first failure {self.failures[0]}"
        return text


def _probabilities(grid: str) -> list[float]:
    if grid == "full":
        return [round(0.01 * i, 2) for i in range(1, 100)]
    return [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99]


def _check(result: SuiteResult, ok: bool, case, fault: bool) -> None:
    result.cases += 1
    if ok == fault:
        result.failures.append(case)


def beta_bound(grid: str, fault: bool = False) -> SuiteResult:
    """beta(p) against p**gamma: below for gamma < 1, equal at 1, above for gamma > 1."""
    sizes = POOL_SIZES if grid == "full" else (2, 25, 1000)
    res = SuiteResult("beta bound (beta vs p^gamma)", f"n={sizes} gamma={POOL_GAMMAS} p={len(_probabilities(grid))} pts")
    for n in sizes:
        for g in POOL_GAMMAS:
            spec = PoolSpec(n, g)
            for p in _probabilities(grid):
                b = pool_math.beta(spec, p)
                target = p**g
                if spec.is_log:
                    ok = b == target
                elif g < 1:
                    ok = b < target
                else:
                    ok = b > target
                _check(res, ok, (n, g, p), fault)
    return res


def ratio_ordering(grid: str, fault: bool = False) -> SuiteResult:
    """Optimal/natural ratio R(p): below 1 for gamma < 1, above 1 for gamma > 1."""
    sizes = POOL_SIZES if grid == "full" else (2, 25, 1000)
    res = SuiteResult("R ordering (optimal vs natural payout)", f"n={sizes} gamma={POOL_GAMMAS} p={len(_probabilities(grid))} pts")
    for n in sizes:
        for g in POOL_GAMMAS:
            spec = PoolSpec(n, g)
            for p in _probabilities(grid):
                excess = pool_math.optimal_excess(spec, p)
                if spec.is_log:
                    ok = pool_math.payout_ratio(spec, p) == 1.0
                elif g < 1:
                    ok = excess < 0
                else:
                    ok = excess > 0
                _check(res, ok, (n, g, p), fault)
    return res


def _product_grid(grid: str, gammas):
    sizes = PRODUCT_SIZES if grid == "full" else (2, 100)
    ages = PRODUCT_AGES if grid == "full" else (60.0, 80.0)
    return sizes, gammas, ages


def tontine_below_annuity(grid: str, fault: bool = False) -> SuiteResult:
    """Optimal tontine utility is strictly below the fair annuity's."""
    sizes, gammas, ages = _product_grid(grid, PRODUCT_GAMMAS)
    econ = EconomicBasis(REFERENCE_RATE)
    res = SuiteResult("tontine below annuity (U_OT < U_A)", f"n={sizes} gamma={gammas} x={ages}")
    for x in ages:
        basis = MortalityBasis(x=x, **REFERENCE_BASIS)
        for n in sizes:
            for g in gammas:
                pool = PoolSpec(n, g)
                u_a = products.annuity_utility(g, basis, econ)
                u_ot = products.tontine_utility(pool, basis, econ)
                _check(res, u_ot < u_a, (n, g, x), fault)
    return res


def loading_below_bound(grid: str, fault: bool = False) -> SuiteResult:
    """Indifference loading is below ``(c0 / r - 1) / n`` for 1 < gamma <= 2."""
    sizes, gammas, ages = _product_grid(grid, LOADING_GAMMAS)
    econ = EconomicBasis(REFERENCE_RATE)
    res = SuiteResult("loading bound (delta < (c0/r - 1)/n)", f"n={sizes} gamma={gammas} x={ages}")
    for x in ages:
        basis = MortalityBasis(x=x, **REFERENCE_BASIS)
        bound_n = products.loading_bound(PoolSpec(1, 2.0), basis, econ)
        for n in sizes:
            for g in gammas:
                delta = products.indifference_loading(PoolSpec(n, g), basis, econ)
                _check(res, 0 < delta < bound_n / n, (n, g, x), fault)
    return res


def reciprocal_identity(grid: str, fault: bool = False) -> SuiteResult:
    """Closed form ``(1 - (1-p)^n) / p`` equals the binomial sum of ``E[n/N]`` to 1e-10."""
    res = SuiteResult("reciprocal identity E[n/N] = (1-(1-p)^n)/p", f"n={RECIPROCAL_SIZES} p={len(_probabilities(grid))} pts")
    for n in RECIPROCAL_SIZES:
        for p in _probabilities(grid):
            closed = pool_math.expected_reciprocal_share(n, p)
            summed = pool_math.expected_reciprocal_share_sum(n, p)
            # The strict bound is only visible while (1-p)^n is above roundoff.
            gap = math.exp(n * math.log1p(-p))
            below = closed < 1.0 / p or gap < 1e-15
            ok = abs(closed - summed) <= 1e-10 * closed and below
            _check(res, ok, (n, p), fault)
    return res


def log_inequality(grid: str, fault: bool = False) -> SuiteResult:
    """``E[log(N/n)] > log p`` for every pool of two or more."""
    sizes = POOL_SIZES + (5000,) if grid == "full" else (2, 25, 1000)
    res = SuiteResult("log inequality E[log(N/n)] > log p", f"n={sizes} p={len(_probabilities(grid))} pts")
    for n in sizes:
        for p in _probabilities(grid):
            ok = pool_math.expected_log_excess(n, p) > 0 and pool_math.expected_log_share(n, p) > math.log(p)
            _check(res, ok, (n, p), fault)
    return res


SUITES: dict[str, Callable[[str, bool], SuiteResult]] = {
    "beta_bound": beta_bound,
    "ratio_ordering": ratio_ordering,
    "utility_order": tontine_below_annuity,
    "loading_bound": loading_below_bound,
    "reciprocal_identity": reciprocal_identity,
    "log_inequality": log_inequality,
}


def run_suites(grid: str = "small", inject_fault: Optional[str] = None) -> list[SuiteResult]:
    """Run every suite; ``inject_fault`` names one to negate."""
    if grid not in GRIDS:
        raise DomainError(f"grid must be one of {GRIDS}, got {grid!r}")
    if inject_fault is not None and inject_fault not in SUITES:
        raise DomainError(f"unknown suite {inject_fault!r}; choose from {sorted(SUITES)}")
    return [fn(grid, name == inject_fault) for name, fn in SUITES.items()]
