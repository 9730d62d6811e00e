"""Exception types shared across the package."""


class TontineError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(TontineError, ValueError):
    """An argument lies outside the domain of the requested function."""


class ConvergenceError(TontineError, ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class DivergenceError(TontineError, ArithmeticError):
    """The requested quantity is infinite for these parameters.

    Raised by the natural-tontine utility and the certainty-equivalent ratio
    when the risk aversion exceeds 2.
    """
