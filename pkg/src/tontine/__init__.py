"""Optimal and natural tontines, life annuities and their Monte Carlo cash flows."""

from .errors import ConvergenceError, DivergenceError, DomainError, TontineError
from .mortality import (
    MortalityBasis,
    annual_death_prob,
    annual_death_probs,
    hazard_rate,
    survival_probability,
)
from .pool_math import (
    PoolSpec,
    beta,
    expected_log_share,
    expected_reciprocal_share,
    payout_ratio,
    theta,
)
from .products import (
    PayoutCurve,
    UtilityReport,
    annuity_utility,
    certainty_equivalent_ratio,
    fair_annuity_rate,
    indifference_loading,
    natural_tontine_utility,
    optimal_tontine_initial_rate,
    subjective_tontine_payout,
    tontine_payout_curve,
    tontine_utility,
    utility_report,
)
from .quadrature import EconomicBasis, QuadratureRule, discounted_integral
from .simulator import (
    SimulationConfig,
    SimulationResult,
    expected_present_value,
    payout_envelope,
    simulate_pool_lifetimes,
    simulate_present_value,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
