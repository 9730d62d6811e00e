"""Monte Carlo present values of tontine and life-annuity cash flows.

A pool of ``n`` identical lives aged ``x`` is followed year by year up to the
maximum age ``omega``.  Member ``i`` is alive in year ``t`` while each of the
yearly killing draws for ``s = 1 .. t`` exceeded ``q_{x+s}``; everybody is
dead in year ``omega - x``.  At the end of each year the survivors split
``w n d(t)`` equally, and member 0 stands in for every subscriber.

Each run draws from its own substream keyed on ``(seed, run index)``, so the
result does not depend on how runs are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from . import pool_math
from .errors import DomainError
from .mortality import MortalityBasis, annual_death_probs

PRODUCTS = ("tontine", "annuity")

Schedule = Union[Callable[[int], float], Sequence[float]]


def king_william_schedule(t: int) -> float:
    """Dividend rate of the 1693 tontine: 10% for seven years, 7% after."""
    return 0.10 if t <= 7 else 0.07


@dataclass(frozen=True)
class SimulationConfig:
    """Inputs of one Monte Carlo scenario.

    ``payout_schedule`` is either a function of the year ``t >= 1`` or a
    sequence indexed by ``t - 1``; it is frozen into ``rates`` on creation.
    ``death_probs`` optionally replaces the basis with explicit ``q_{x+t}``
    for ``t = 0, 1, ...``.  ``stop_at`` ends dividends once the number of
    survivors falls to that level (off by default).
    """

    basis: MortalityBasis
    n: int = 1000
    w: float = 100.0
    payout_schedule: Schedule = king_william_schedule
    product: str = "tontine"
    annuity_rate: float = 0.14
    valuation_rate: float = 0.06
    omega: int = 105
    runs: int = 10_000
    seed: int = 0
    death_probs: Optional[Sequence[float]] = None
    stop_at: Optional[int] = None
    rates: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"pool size must be an integer >= 1, got {self.n}")
        if int(self.runs) != self.runs or self.runs < 1:
            raise DomainError(f"runs must be an integer >= 1, got {self.runs}")
        if self.product not in PRODUCTS:
            raise DomainError(f"product must be one of {PRODUCTS}, got {self.product!r}")
        if float(self.basis.x) != int(self.basis.x):
            raise DomainError("simulation needs a whole-year entry age")
        if not self.omega > self.basis.x:
            raise DomainError(f"omega={self.omega} must exceed entry age {self.basis.x}")
        if self.valuation_rate <= -1:
            raise DomainError("valuation rate must exceed -100%")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if self.w < 0 or self.annuity_rate < 0:
            raise DomainError("contribution and annuity rate must be >= 0")
        if self.stop_at is not None and self.stop_at < 0:
            raise DomainError("stop_at must be >= 0")
        years = self.years
        if callable(self.payout_schedule):
            rates = [0.0] + [float(self.payout_schedule(t)) for t in range(1, years + 1)]
        else:
            seq = [float(v) for v in self.payout_schedule]
            if len(seq) < years:
                seq = seq + [seq[-1] if seq else 0.0] * (years - len(seq))
            rates = [0.0] + seq[:years]
        if any(r < 0 or not math.isfinite(r) for r in rates):
            raise DomainError("payout rates must be finite and >= 0")
        if self.death_probs is not None:
            q = np.asarray(self.death_probs, dtype=float)
            if q.ndim != 1 or len(q) < years or np.any((q < 0) | (q > 1)):
                raise DomainError(f"death_probs needs {years} values in [0, 1]")
        object.__setattr__(self, "rates", tuple(rates))

    @property
    def years(self) -> int:
        return int(self.omega - self.basis.x)

    def survival_curve(self) -> np.ndarray:
        """``S[t]`` = probability a member is alive in year ``t``, ``t = 0 .. years``."""
        years = self.years
        if self.death_probs is not None:
            q = np.asarray(self.death_probs, dtype=float)[:years]
        else:
            q = annual_death_probs(self.basis, years)
        s = np.ones(years + 1)
        # Year t kills with q_{x+t}; year 0 is certain and the last year is forced empty.
        s[1:years] = np.cumprod(1.0 - q[1:years])
        s[years] = 0.0
        return s

    def discount(self) -> np.ndarray:
        return (1.0 + self.valuation_rate) ** -np.arange(self.years + 1, dtype=float)


@dataclass(frozen=True)
class SimulationResult:
    """Moments of the representative member's present value over all runs.

    ``sd``, ``skewness`` and ``kurtosis`` use central moments divided by the
    number of runs; kurtosis is raw (3 for a normal law).
    """

    apv: float
    sd: float
    skewness: float
    kurtosis: float
    runs: int
    seed: int

    @property
    def standard_error(self) -> float:
        return self.sd / math.sqrt(self.runs)


@dataclass(frozen=True)
class LifetimePaths:
    """Survivor counts ``counts[j, t]`` and member 0's last year alive per run."""

    counts: np.ndarray
    member_years: np.ndarray


def _rng(seed: int, run: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(run,))))


def _lifetimes(u: np.ndarray, ascending_survival: np.ndarray) -> np.ndarray:
    # Years survived: the largest t with u < S[t].  Inverse-transform
    # sampling, equivalent in law to one killing draw per year.
    return len(ascending_survival) - np.searchsorted(ascending_survival, u, side="right")


def _alive_counts(years_alive: np.ndarray, years: int) -> np.ndarray:
    hist = np.bincount(years_alive, minlength=years + 1)
    return np.cumsum(hist[::-1])[::-1]


class _Engine:
    """Per-scenario constants shared by every run."""

    def __init__(self, config: SimulationConfig):
        self.config = config
        self.years = config.years
        s = config.survival_curve()
        # S[1..years] ascending, excluding S[0] = 1 which every life attains.
        self.ascending = s[1:][::-1].copy()
        self.discount = config.discount()
        self.totals = config.w * config.n * np.asarray(config.rates)
        self.annuity_cash = config.w * config.annuity_rate

    def paths(self, run: int) -> tuple[np.ndarray, np.ndarray]:
        u = _rng(self.config.seed, run).random(self.config.n)
        ages = _lifetimes(u, self.ascending)
        return ages, _alive_counts(ages, self.years)

    def dividends(self, counts: np.ndarray) -> np.ndarray:
        """Dividend per survivor by year; zero in years without survivors."""
        per_head = np.zeros(self.years + 1)
        live = counts > 0
        if self.config.stop_at is not None:
            live &= counts > self.config.stop_at
        per_head[live] = self.totals[live] / counts[live]
        per_head[0] = 0.0
        return per_head

    def member_pv(self, years_alive: int, counts: np.ndarray) -> float:
        k = int(years_alive)
        if k == 0:
            return 0.0
        if self.config.product == "annuity":
            return self.annuity_cash * float(np.sum(self.discount[1 : k + 1]))
        per_head = self.dividends(counts)
        return float(np.dot(per_head[1 : k + 1], self.discount[1 : k + 1]))

    def run_pv(self, run: int) -> float:
        ages, counts = self.paths(run)
        return self.member_pv(ages[0], counts)


def _pv_chunk(args) -> np.ndarray:
    config, start, stop = args
    engine = _Engine(config)
    return np.array([engine.run_pv(j) for j in range(start, stop)])


def _chunks(runs: int, workers: int):
    size = max(1, math.ceil(runs / (4 * workers)))
    return [(i, min(i + size, runs)) for i in range(0, runs, size)]


def present_values(config: SimulationConfig, workers: int = 1) -> np.ndarray:
    """Member 0's present value in every run, in run order."""
    if workers <= 1:
        return _pv_chunk((config, 0, config.runs))
    jobs = [(config, a, b) for a, b in _chunks(config.runs, workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_pv_chunk, jobs))
    return np.concatenate(parts)


def summarize(pv: np.ndarray, seed: int) -> SimulationResult:
    """Mean, standard deviation, skewness and raw kurtosis with divisor M."""
    m = len(pv)
    mean = math.fsum(pv) / m
    dev = pv - mean
    m2 = math.fsum(dev**2) / m
    m3 = math.fsum(dev**3) / m
    m4 = math.fsum(dev**4) / m
    if m2 > 0:
        skew = m3 / m2**1.5
        kurt = m4 / m2**2
    else:
        skew = kurt = float("nan")
    return SimulationResult(mean, math.sqrt(m2), skew, kurt, m, seed)


def simulate_present_value(config: SimulationConfig, workers: int = 1) -> SimulationResult:
    """Monte Carlo moments of the representative member's present value."""
    return summarize(present_values(config, workers), config.seed)


def simulate_pool_lifetimes(config: SimulationConfig) -> LifetimePaths:
    """Survivor counts per year for every run, year 0 through ``omega - x``."""
    engine = _Engine(config)
    counts = np.empty((config.runs, config.years + 1), dtype=np.int64)
    member = np.empty(config.runs, dtype=np.int64)
    for j in range(config.runs):
        ages, counts[j] = engine.paths(j)
        member[j] = ages[0]
    return LifetimePaths(counts, member)


def member_present_values(config: SimulationConfig, run: int) -> np.ndarray:
    """Present value for every member of the pool in one run."""
    engine = _Engine(config)
    ages, counts = engine.paths(run)
    if config.product == "annuity":
        cum = np.concatenate([[0.0], np.cumsum(engine.discount[1:])])
        return engine.annuity_cash * cum[ages]
    per_head = engine.dividends(counts) * engine.discount
    cum = np.concatenate([[0.0], np.cumsum(per_head[1:])])
    return cum[ages]


def run_dividends(config: SimulationConfig, run: int) -> tuple[np.ndarray, np.ndarray]:
    """``(counts, total paid)`` per year for one run of a tontine."""
    engine = _Engine(config)
    _, counts = engine.paths(run)
    return counts, engine.dividends(counts) * counts


def expected_present_value(config: SimulationConfig) -> float:
    """Exact expectation of the representative member's present value.

    Tontine: ``sum_t v^t w d(t) (1 - (1 - S_t)^n)`` because the share
    ``n / N`` of a live member has mean ``(1 - (1 - S)^n) / S``.
    """
    if config.stop_at is not None:
        raise DomainError("no closed form with a survivor floor")
    s = config.survival_curve()
    v = config.discount()
    total = 0.0
    terms = []
    for t in range(1, config.years + 1):
        if s[t] == 0.0:
            continue
        if config.product == "annuity":
            cash = config.w * config.annuity_rate * s[t]
        else:
            cash = config.w * config.rates[t] * s[t] * pool_math.expected_reciprocal_share(config.n, s[t])
        terms.append(cash * v[t])
    total = math.fsum(terms)
    return total


@dataclass(frozen=True)
class Envelope:
    """Per-survivor dividend band: ``lower`` from many survivors, ``upper`` from few."""

    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)


def payout_envelope(pool: pool_math.PoolSpec, curve, percentiles: tuple[float, float] = (0.1, 0.9)) -> Envelope:
    """Dividend per survivor at binomial survivor-count quantiles.

    With ``N - 1 ~ Bin(n - 1, tpx)``, the band is ``n d(t) / k_hi`` to
    ``n d(t) / k_lo`` where ``k_lo``, ``k_hi`` are the lower and upper
    quantiles of ``N``.
    """
    lo, hi = percentiles
    if not 0 < lo < hi < 1:
        raise DomainError(f"percentiles must satisfy 0 < lo < hi < 1, got {percentiles}")
    n = pool.n
    p = np.clip(np.asarray(curve.survival, dtype=float), 0.0, 1.0)
    k_lo = stats.binom.ppf(lo, n - 1, p) + 1.0
    k_hi = stats.binom.ppf(hi, n - 1, p) + 1.0
    # ppf is undefined at p = 1 in older scipy; the count is then n surely.
    k_lo = np.where(p >= 1.0, n, k_lo)
    k_hi = np.where(p >= 1.0, n, k_hi)
    total = n * np.asarray(curve.rates, dtype=float)
    return Envelope(np.asarray(curve.grid), total / k_hi, total / k_lo)
