"""Built-in reference scenarios and their published values.

Each ``reproduce_*`` function recomputes one table and returns
``TableCell`` rows holding the computed value next to the reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import products
from .mortality import MortalityBasis
from .pool_math import PoolSpec
from .quadrature import DEFAULT_RULE, EconomicBasis, QuadratureRule
from .simulator import SimulationConfig, king_william_schedule, simulate_present_value

DEFAULT_SEED = 1693


@dataclass(frozen=True)
class TableCell:
    table: str
    row: str
    column: str
    value: Optional[float]
    reference: Optional[float]


# Optimal payout rates, percent, n = 25, r = 4%, Gompertz(88.72, 10) at 65.
PAYOUT_BASIS = MortalityBasis(m=88.72, b=10.0, x=65.0)
PAYOUT_RATE = 0.04
PAYOUT_POOL = 25
PAYOUT_AGES = (65.0, 80.0, 95.0)
PAYOUT_TABLE = {
    0.5: (7.565, 5.446, 1.200),
    1.0: (7.520, 5.435, 1.268),
    1.5: (7.482, 5.428, 1.324),
    2.0: (7.447, 5.423, 1.374),
    4.0: (7.324, 5.410, 1.541),
    9.0: (7.081, 5.394, 1.847),
}

# Indifference loadings, basis points, x = 60, r = 3%, Gompertz(87.25, 9.5).
LOADING_BASIS = MortalityBasis(m=87.25, b=9.5, x=60.0)
LOADING_RATE = 0.03
LOADING_POOLS = (20, 100, 500, 1000, 5000)
LOADING_TABLE = {
    0.5: (72.6, 14.5, 2.97, 1.50, 0.30),
    1.0: (129.8, 27.4, 5.74, 2.92, 0.60),
    1.5: (182.4, 39.8, 8.45, 4.31, 0.89),
    2.0: (231.7, 51.8, 11.1, 5.68, 1.18),
    3.0: (323.1, 75.1, 16.3, 8.38, 1.75),
    9.0: (753.6, 199.8, 45.9, 23.8, 5.09),
}

# Scaled loading n * delta for gamma = 2 at age 50 and its large-pool limit.
SCALED_LOADING_BASIS = MortalityBasis(m=87.25, b=9.5, x=50.0)
SCALED_LOADING_POOLS = (10, 100, 1000)
SCALED_LOADING = (0.2858, 0.3377, 0.3671)
SCALED_LOADING_LIMIT = 0.6593

# Certainty equivalent ratio natural/optimal for n = 100, r = 3%.
CERTAINTY_POOL = 100
CERTAINTY_GAMMAS = (0.5, 1.0, 2.0)
CERTAINTY_TABLE = {
    30.0: (1.000018, 1.0, 1.000215),
    40.0: (1.000026, 1.0, 1.000753),
    50.0: (1.000041, 1.0, 1.001674),
    60.0: (1.000067, 1.0, 1.003388),
    70.0: (1.000118, 1.0, 1.003451),
    80.0: (1.000225, 1.0, 1.009877),
}

# 1693 tontine (10% then 7%) and 14% life annuity, age 10, per 100.
HISTORICAL_BASES = {
    "goma": MortalityBasis(m=69.5, b=13.8, makeham=0.0104, x=10.0),
    "m50": MortalityBasis(m=50.0, b=10.0, makeham=0.0, x=10.0),
}
HISTORICAL_RATES = (0.04, 0.06, 0.08)
# (APV, SD, skewness) keyed by (product, rate, basis).
HISTORICAL_TABLE = {
    ("tontine", 0.04, "goma"): (186.54, 96.05, 4.06),
    ("tontine", 0.04, "m50"): (174.91, 96.98, 13.18),
    ("tontine", 0.06, "goma"): (133.02, 45.74, -0.46),
    ("tontine", 0.06, "m50"): (130.31, 48.5, 11.16),
    ("tontine", 0.08, "goma"): (103.15, 28.88, -1.73),
    ("tontine", 0.08, "m50"): (102.10, 21.41, 2.42),
    ("annuity", 0.04, "goma"): (244.05, 87.07, -1.19),
    ("annuity", 0.04, "m50"): (245.16, 54.24, -1.73),
    ("annuity", 0.06, "goma"): (184.53, 57.88, -1.60),
    ("annuity", 0.06, "m50"): (191.13, 35.44, -2.44),
    ("annuity", 0.08, "goma"): (147.55, 41.17, -1.99),
    ("annuity", 0.08, "m50"): (155.38, 23.19, -3.19),
}


def certainty_rule(x: float) -> QuadratureRule:
    """Yearly sum over 80 years (entry up to 60) or 50 years (older).

    The certainty equivalent table was tabulated this way; continuous
    integration differs from it in the fifth decimal for gamma = 2.
    """
    return QuadratureRule(scheme="annual", horizon=80.0 if x <= 60 else 50.0)


def reproduce_payout_table(rule: QuadratureRule = DEFAULT_RULE) -> list[TableCell]:
    econ = EconomicBasis(PAYOUT_RATE)
    grid = [a - PAYOUT_BASIS.x for a in PAYOUT_AGES]
    cells = []
    for g, refs in PAYOUT_TABLE.items():
        curve = products.tontine_payout_curve("optimal", PoolSpec(PAYOUT_POOL, g), PAYOUT_BASIS, econ, grid, rule)
        for age, rate, ref in zip(PAYOUT_AGES, curve.rates, refs):
            cells.append(TableCell("payout", f"gamma={g:g}", f"age={age:g}", 100.0 * rate, ref))
    return cells


def reproduce_loading_table(rule: QuadratureRule = DEFAULT_RULE) -> list[TableCell]:
    econ = EconomicBasis(LOADING_RATE)
    cells = []
    for g, refs in LOADING_TABLE.items():
        for n, ref in zip(LOADING_POOLS, refs):
            delta = products.indifference_loading(PoolSpec(n, g), LOADING_BASIS, econ, rule)
            cells.append(TableCell("loading_bp", f"gamma={g:g}", f"n={n}", 1e4 * delta, ref))
    return cells


def reproduce_scaled_loading(rule: QuadratureRule = DEFAULT_RULE) -> list[TableCell]:
    econ = EconomicBasis(LOADING_RATE)
    cells = []
    for n, ref in zip(SCALED_LOADING_POOLS, SCALED_LOADING):
        delta = products.indifference_loading(PoolSpec(n, 2.0), SCALED_LOADING_BASIS, econ, rule)
        cells.append(TableCell("scaled_loading", "gamma=2", f"n={n}", n * delta, ref))
    limit = products.loading_asymptote(2.0, SCALED_LOADING_BASIS, econ, rule)
    cells.append(TableCell("scaled_loading", "gamma=2", "n=inf", limit, SCALED_LOADING_LIMIT))
    return cells


def reproduce_certainty_table(continuous: bool = False) -> list[TableCell]:
    econ = EconomicBasis(LOADING_RATE)
    cells = []
    for x, refs in CERTAINTY_TABLE.items():
        basis = MortalityBasis(m=87.25, b=9.5, x=x)
        rule = DEFAULT_RULE if continuous else certainty_rule(x)
        for g, ref in zip(CERTAINTY_GAMMAS, refs):
            value = products.certainty_equivalent_ratio(PoolSpec(CERTAINTY_POOL, g), basis, econ, rule)
            cells.append(TableCell("certainty_equivalent", f"x={x:g}", f"gamma={g:g}", value, ref))
    return cells


def historical_configs(seed: int = DEFAULT_SEED, runs: int = 10_000) -> list[tuple[str, SimulationConfig]]:
    """The twelve 1693 tontine and 14% annuity simulation scenarios."""
    out = []
    for product in ("tontine", "annuity"):
        for rate in HISTORICAL_RATES:
            for key, basis in HISTORICAL_BASES.items():
                cfg = SimulationConfig(
                    basis=basis,
                    n=1000,
                    w=100.0,
                    payout_schedule=king_william_schedule,
                    product=product,
                    annuity_rate=0.14,
                    valuation_rate=rate,
                    omega=105,
                    runs=runs,
                    seed=seed,
                )
                out.append((f"{product}-{round(100 * rate)}pct-{key}", cfg))
    return out


def reproduce_historical(seed: int = DEFAULT_SEED, runs: int = 10_000, workers: int = 1) -> list[TableCell]:
    cells = []
    for name, cfg in historical_configs(seed, runs):
        res = simulate_present_value(cfg, workers)
        apv, sd, skew = HISTORICAL_TABLE[(cfg.product, cfg.valuation_rate, name.rsplit("-", 1)[1])]
        cells.append(TableCell("historical", name, "apv", res.apv, apv))
        cells.append(TableCell("historical", name, "apv_stderr", res.standard_error, None))
        cells.append(TableCell("historical", name, "sd", res.sd, sd))
        cells.append(TableCell("historical", name, "skewness", res.skewness, skew))
    return cells


TABLES = {
    "payout": reproduce_payout_table,
    "loading": reproduce_loading_table,
    "scaled_loading": reproduce_scaled_loading,
    "certainty": lambda rule=DEFAULT_RULE: reproduce_certainty_table(),
}
