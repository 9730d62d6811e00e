"""Discounted lifetime integrals.

Every utility, price and loading reduces to an integral of the form
``int_0^H exp(-r t) f(t) dt``.  The default rule is adaptive Simpson with a
Richardson correction; an annual left-endpoint sum is available for
reproducing tables that were computed on a yearly grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import ConvergenceError, DomainError

DEFAULT_REL_TOL = 1e-10
MAX_DEPTH = 30
INITIAL_PANELS = 16

# Subintervals whose Simpson correction is below this fraction of their own
# magnitude are accepted: the difference is evaluation roundoff, not error.
_NOISE_FLOOR = 1e-13

# exp(-r T) below this ends an infinite horizon.
_TAIL_DISCOUNT = 1e-17

SCHEMES = ("simpson", "annual")


@dataclass(frozen=True)
class EconomicBasis:
    """Risk-free rate (also the subjective discount rate) and annuity loading.

    Attributes:
        r: Continuously compounded rate per year, strictly positive.
        loading: Fraction of the annuity premium deducted up front, in [0, 1).
    """

    r: float
    loading: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.r, (int, float)) or not math.isfinite(self.r) or self.r <= 0:
            raise DomainError(f"rate r must be positive, got {self.r!r}")
        if not isinstance(self.loading, (int, float)) or not 0 <= self.loading < 1:
            raise DomainError(f"loading must lie in [0, 1), got {self.loading!r}")


def _simpson_panels(g, a, b, panels):
    h = (b - a) / panels
    nodes = [a + i * h for i in range(panels)] + [b]
    values = [g(t) for t in nodes]
    out = []
    for i in range(panels):
        lo, hi = nodes[i], nodes[i + 1]
        mid = 0.5 * (lo + hi)
        fm = g(mid)
        s = (hi - lo) / 6.0 * (values[i] + 4.0 * fm + values[i + 1])
        out.append((lo, hi, values[i], fm, values[i + 1], s))
    return out


def discounted_integral(
    integrand: Callable[[float], float],
    r: float,
    horizon: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = 0.0,
) -> float:
    """Adaptive Simpson estimate of ``int_0^horizon exp(-r t) integrand(t) dt``.

    The target error is the larger of ``rel_tol`` times the result and
    ``abs_tol``.  An infinite horizon is cut where the discount factor drops
    below 1e-17.

    Raises:
        DomainError: for a non-positive tolerance or negative horizon.
        ConvergenceError: if any subinterval needs more than ``MAX_DEPTH``
            bisections, or the integrand returns a non-finite value.
    """
    if not rel_tol > 0:
        raise DomainError(f"rel_tol must be positive, got {rel_tol}")
    if not abs_tol >= 0:
        raise DomainError(f"abs_tol must be >= 0, got {abs_tol}")
    if horizon < 0 or math.isnan(horizon):
        raise DomainError(f"horizon must be >= 0, got {horizon}")
    if r <= 0:
        raise DomainError(f"rate must be positive, got {r}")
    if math.isinf(horizon):
        horizon = -math.log(_TAIL_DISCOUNT) / r
    if horizon == 0:
        return 0.0

    def g(t: float) -> float:
        v = math.exp(-r * t) * integrand(t)
        if not math.isfinite(v):
            raise ConvergenceError(f"integrand is not finite at t={t}: {v}")
        return v

    panels = _simpson_panels(g, 0.0, horizon, INITIAL_PANELS)
    scale = max(abs(math.fsum(p[5] for p in panels)), math.fsum(abs(p[5]) for p in panels))
    eps_total = max(rel_tol * scale, abs_tol)

    accepted = []
    stack = [(lo, hi, fa, fm, fb, s, eps_total * (hi - lo) / horizon, 0)
             for lo, hi, fa, fm, fb, s in reversed(panels)]
    while stack:
        a, b, fa, fm, fb, s, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = g(lm)
        frm = g(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        diff = left + right - s
        if abs(diff) <= 15.0 * eps or abs(diff) <= _NOISE_FLOOR * (abs(left) + abs(right)):
            accepted.append(left + right + diff / 15.0)
            continue
        if depth + 1 >= MAX_DEPTH:
            raise ConvergenceError(
                f"adaptive Simpson exceeded depth {MAX_DEPTH} on [{a}, {b}]"
            )
        stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
        stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))
    return math.fsum(accepted)


def annual_sum(integrand: Callable[[float], float], r: float, horizon: float) -> float:
    """Yearly left-endpoint sum ``sum_{t=0}^{floor(horizon)} exp(-r t) integrand(t)``."""
    if horizon < 0 or math.isinf(horizon) or math.isnan(horizon):
        raise DomainError(f"annual sums need a finite horizon >= 0, got {horizon}")
    return math.fsum(math.exp(-r * t) * integrand(float(t)) for t in range(int(horizon) + 1))


@dataclass(frozen=True)
class QuadratureRule:
    """How products evaluate their lifetime integrals.

    Attributes:
        rel_tol: Relative tolerance for adaptive Simpson.
        scheme: ``"simpson"`` (continuous time) or ``"annual"`` (yearly sum).
        horizon: Years to integrate over; ``None`` means up to the age cap.
    """

    rel_tol: float = DEFAULT_REL_TOL
    scheme: str = "simpson"
    horizon: Optional[float] = None

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.horizon is not None and not self.horizon >= 0:
            raise DomainError(f"horizon must be >= 0, got {self.horizon}")

    def integrate(self, integrand, r: float, default_horizon: float, abs_tol: float = 0.0) -> float:
        horizon = default_horizon if self.horizon is None else self.horizon
        if self.scheme == "annual":
            return annual_sum(integrand, r, horizon)
        return discounted_integral(integrand, r, horizon, self.rel_tol, abs_tol)


DEFAULT_RULE = QuadratureRule()
