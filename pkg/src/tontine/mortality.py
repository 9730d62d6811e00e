"""Gompertz-Makeham mortality: survival, hazard and one-year death rates.

The hazard at age ``x + t`` is ``l + exp((x + t - m) / b) / b``.  Integrating
gives the closed form survival curve

    tpx = exp(-l t + exp((x - m) / b) (1 - exp(t / b)))

which is what every other module consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

OMEGA_CAP = 130.0
"""Hard age cap.  Tabulation grids and lifetime integrals end here."""

UNDERFLOW = 1e-300


@dataclass(frozen=True)
class MortalityBasis:
    """Gompertz-Makeham parameters plus the entry age.

    Attributes:
        m: Modal age at death (years).
        b: Dispersion (years), strictly positive.
        makeham: Age-independent hazard addon per year (``l`` in the tables).
        x: Entry age in years, ``0 <= x < OMEGA_CAP``.
    """

    m: float
    b: float
    makeham: float = 0.0
    x: float = 65.0

    def __post_init__(self) -> None:
        for name in ("m", "b", "makeham", "x"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise DomainError(f"{name} must be a finite number, got {value!r}")
        if self.b <= 0:
            raise DomainError(f"dispersion b must be positive, got {self.b}")
        if self.makeham < 0:
            raise DomainError(f"makeham must be >= 0, got {self.makeham}")
        if not 0 <= self.x < OMEGA_CAP:
            raise DomainError(f"entry age must lie in [0, {OMEGA_CAP}), got {self.x}")

    @property
    def horizon(self) -> float:
        """Years from entry until the age cap."""
        return OMEGA_CAP - self.x

    def to_dict(self) -> dict:
        return {"m": self.m, "b": self.b, "l": self.makeham, "x": self.x}

    @classmethod
    def from_dict(cls, data: dict) -> "MortalityBasis":
        unknown = set(data) - {"m", "b", "l", "x"}
        if unknown:
            raise DomainError(f"unknown mortality keys: {sorted(unknown)}")
        missing = {"m", "b"} - set(data)
        if missing:
            raise DomainError(f"missing mortality keys: {sorted(missing)}")
        return cls(
            m=data["m"], b=data["b"], makeham=data.get("l", 0.0), x=data.get("x", 65.0)
        )


def _check_time(t):
    arr = np.asarray(t, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError(f"time must be >= 0, got {t!r}")
    return arr


def survival_probability(basis: MortalityBasis, t):
    """Probability that a life aged ``basis.x`` survives ``t`` more years.

    Accepts a scalar or an array of times.  Returns exactly 1 at ``t = 0``
    and 0 below the underflow floor.  The age cap is not applied here; grids
    and integrals stop at ``basis.horizon``.
    """
    arr = _check_time(t)
    scale = math.exp((basis.x - basis.m) / basis.b)
    with np.errstate(over="ignore"):
        log_s = -basis.makeham * arr - scale * np.expm1(arr / basis.b)
    s = np.exp(log_s)
    s = np.where(s < UNDERFLOW, 0.0, s)
    if s.ndim == 0:
        return float(s)
    return s


def hazard_rate(basis: MortalityBasis, t):
    """Force of mortality at age ``basis.x + t`` (per year)."""
    arr = _check_time(t)
    h = basis.makeham + np.exp((basis.x + arr - basis.m) / basis.b) / basis.b
    if h.ndim == 0:
        return float(h)
    return h


def _log_one_year_survival(basis: MortalityBasis, t):
    scale = math.exp((basis.x - basis.m) / basis.b)
    with np.errstate(over="ignore"):
        return -basis.makeham - scale * np.exp(np.asarray(t, dtype=float) / basis.b) * math.expm1(1.0 / basis.b)


def annual_death_prob(basis: MortalityBasis, t: int) -> float:
    """One-year death probability ``q_{x+t} = 1 - p(t+1) / p(t)``.

    Raises:
        DomainError: if ``t`` is negative or survival to ``t`` is zero.
    """
    if t < 0:
        raise DomainError(f"year index must be >= 0, got {t}")
    if survival_probability(basis, t) == 0.0:
        raise DomainError(f"survival to t={t} is zero; q is undefined")
    return float(-np.expm1(_log_one_year_survival(basis, t)))


def annual_death_probs(basis: MortalityBasis, years: int) -> np.ndarray:
    """Vector of ``q_{x+t}`` for ``t = 0 .. years-1``; 1 once survival hits zero."""
    t = np.arange(years, dtype=float)
    q = -np.expm1(_log_one_year_survival(basis, t))
    q[survival_probability(basis, t) == 0.0] = 1.0
    return np.clip(q, 0.0, 1.0)
