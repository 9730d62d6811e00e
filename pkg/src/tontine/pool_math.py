"""Binomial pool functionals for a tontine with ``n`` identical subscribers.

Conditional on a given subscriber being alive, the number of live subscribers
is ``N(p) = 1 + Bin(n - 1, p)``.  Everything here is an exact expectation over
that law, summed in log space so that pools of several thousand members do
not overflow the binomial coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DomainError

LOG_CASE_TOL = 1e-9

# Binomial terms further than this many standard deviations (plus a fixed
# margin) from the mean are below exp(-80) relative and are skipped.
_WINDOW_SD = 13.0
_WINDOW_PAD = 25


@dataclass(frozen=True)
class PoolSpec:
    """Pool size and longevity risk aversion.

    Attributes:
        n: Initial number of subscribers, at least 1.
        gamma: CRRA coefficient, strictly positive.
    """

    n: int
    gamma: float

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise DomainError(f"pool size n must be an integer >= 1, got {self.n!r}")
        if not isinstance(self.gamma, (int, float)) or not math.isfinite(self.gamma) or self.gamma <= 0:
            raise DomainError(f"gamma must be a positive number, got {self.gamma!r}")

    @property
    def is_log(self) -> bool:
        """True when gamma is close enough to 1 to use logarithmic utility."""
        return abs(self.gamma - 1.0) <= LOG_CASE_TOL


@lru_cache(maxsize=64)
def _log_binom_coeffs(m: int) -> np.ndarray:
    k = np.arange(m + 1, dtype=float)
    return gammaln(m + 1.0) - gammaln(k + 1.0) - gammaln(m - k + 1.0)


def _check_p(p: float, *, allow_zero: bool = True) -> float:
    p = float(p)
    if math.isnan(p) or p < 0.0 or p > 1.0 or (not allow_zero and p == 0.0):
        bound = "(0, 1]" if not allow_zero else "[0, 1]"
        raise DomainError(f"probability must lie in {bound}, got {p}")
    return p


def binomial_support(n: int, p: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(k, w)``: other-survivor counts and their Bin(n-1, p) weights.

    Only the numerically relevant window of ``k`` is returned.  Requires
    ``0 < p < 1``.
    """
    m = n - 1
    mean = m * p
    sd = math.sqrt(m * p * (1.0 - p))
    lo = max(0, int(math.floor(mean - _WINDOW_SD * sd)) - _WINDOW_PAD)
    hi = min(m, int(math.ceil(mean + _WINDOW_SD * sd)) + _WINDOW_PAD)
    k = np.arange(lo, hi + 1, dtype=float)
    log_w = _log_binom_coeffs(m)[lo : hi + 1] + k * math.log(p) + (m - k) * math.log1p(-p)
    w = np.exp(log_w)
    # log-gamma roundoff near m = 5000 leaves ~1e-12 of total-mass error;
    # the window holds all but exp(-80) of the mass, so renormalise.
    return k, w / math.fsum(w)


def _expect(n: int, p: float, fn) -> float:
    """E[fn(N)] with N = 1 + Bin(n-1, p), using compensated summation."""
    if p == 1.0:
        return float(fn(np.array([float(n)]))[0])
    if p == 0.0 or n == 1:
        return float(fn(np.array([1.0]))[0])
    k, w = binomial_support(n, p)
    return math.fsum(w * fn(k + 1.0))


def theta(spec: PoolSpec, p: float) -> float:
    """E[(n / N(p)) ** (1 - gamma)].

    At ``p = 0`` this is the single-survivor value ``n ** (1 - gamma)``.
    """
    p = _check_p(p)
    if spec.is_log or spec.n == 1 or p == 1.0:
        return 1.0
    a = 1.0 - spec.gamma
    n = spec.n
    return _expect(n, p, lambda N: np.exp(a * np.log(n / N)))


def beta(spec: PoolSpec, p: float) -> float:
    """``p * theta(p)``; zero at ``p = 0`` and one at ``p = 1``."""
    p = _check_p(p)
    if p == 0.0:
        return 0.0
    if spec.is_log:
        return p
    return p * theta(spec, p)


def expected_reciprocal_share(n: int, p: float) -> float:
    """E[n / N(p)] in closed form, ``(1 - (1 - p) ** n) / p``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    p = _check_p(p, allow_zero=False)
    return -math.expm1(n * math.log1p(-p)) / p if p < 1.0 else 1.0


def expected_reciprocal_share_sum(n: int, p: float) -> float:
    """E[n / N(p)] by direct binomial summation; oracle for the closed form."""
    p = _check_p(p, allow_zero=False)
    return _expect(n, p, lambda N: n / N)


def expected_log_share(n: int, p: float) -> float:
    """E[log(N(p) / n)], the log-utility analogue of ``theta``."""
    p = _check_p(p)
    return _expect(n, p, lambda N: np.log(N / n))


def payout_ratio(spec: PoolSpec, p: float) -> float:
    """Optimal over natural payout, each normalised at ``p = 1``: ``beta**(1/gamma) / p``."""
    p = _check_p(p, allow_zero=False)
    if spec.is_log:
        return 1.0
    return beta(spec, p) ** (1.0 / spec.gamma) / p


def _log_ratio(count: np.ndarray, mean: float) -> np.ndarray:
    """``log(count / mean)`` via log1p; exact near 1 even when ``mean`` is ~1e6."""
    return np.log1p((count - mean) / mean)


def log_scaled_theta(spec: PoolSpec, p: float) -> float:
    """``log(p ** (1 - gamma) * theta(p)) = log E[(n p / N) ** (1 - gamma)]``.

    For large pools ``n p / N`` concentrates at 1, so the expectation is
    summed as ``E[expm1(.)]`` to keep relative precision in the small result.
    """
    p = _check_p(p, allow_zero=False)
    if spec.is_log or p == 1.0:
        return 0.0
    a = 1.0 - spec.gamma
    n = spec.n
    if n == 1:
        return a * math.log(p)
    k, w = binomial_support(n, p)
    exponent = -a * _log_ratio(k + 1.0, n * p)
    if float(np.max(exponent)) < 30.0:
        excess = math.fsum(w * np.expm1(exponent))
        if excess > -0.5:
            return math.log1p(excess)
    with np.errstate(divide="ignore"):
        return float(logsumexp(np.log(w) + exponent))


def optimal_excess(spec: PoolSpec, p: float) -> float:
    """``beta(p) ** (1/gamma) - p`` without cancellation near ``gamma = 1`` or for large ``n``."""
    p = _check_p(p)
    if p == 0.0 or p == 1.0 or spec.is_log:
        return 0.0
    return p * math.expm1(log_scaled_theta(spec, p) / spec.gamma)


def natural_excess(spec: PoolSpec, p: float) -> float:
    """``p ** (2 - gamma) * theta(p) - p``, the natural-tontine utility integrand less ``p``.

    Written as ``p * (E[(n p / N) ** (1 - gamma)] - 1)`` so it is accurate
    near ``gamma = 1``.  At ``p = 0`` the limit is ``n ** (1 - gamma)`` times
    ``0 ** (2 - gamma)``: zero below gamma = 2, ``1 / n`` at gamma = 2.
    """
    p = _check_p(p)
    if p == 1.0 or spec.is_log:
        return 0.0
    if p == 0.0:
        return 1.0 / spec.n if spec.gamma == 2.0 else 0.0
    a = 1.0 - spec.gamma
    n = spec.n
    return p * _expect(n, p, lambda N: np.expm1(-a * _log_ratio(N, n * p)))


def expected_log_excess(n: int, p: float) -> float:
    """``E[log(N(p) / (n p))] = E[log(N / n)] - log p``; positive for ``n >= 2``, ``0 < p < 1``."""
    p = _check_p(p, allow_zero=False)
    return _expect(n, p, lambda N: _log_ratio(N, n * p))
