"""Exception hierarchy.

Every numerical failure surfaces as a subclass of :class:`FreeJacobiError`
so callers can catch the whole family at once.  Nothing in the package
returns NaN or infinity as a silent failure marker.
"""


class FreeJacobiError(ArithmeticError):
    """Base class for all package errors."""


class DomainError(FreeJacobiError, ValueError):
    """Argument outside the domain where the map is defined."""


class PoleError(FreeJacobiError, ZeroDivisionError):
    """Argument sits on a pole of a meromorphic map."""


class FlowOverflowError(FreeJacobiError, OverflowError):
    """Intermediate quantity exceeds the floating point range."""


class ConvergenceError(FreeJacobiError):
    """Iterative solver did not reach its tolerance.

    Attributes
    ----------
    residual : float
        Last residual seen before giving up.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class DomainEscapeError(ConvergenceError):
    """Continuation path left the univalence domain."""


class ResolutionError(FreeJacobiError):
    """Discretization too coarse to certify the answer either way."""


class BracketError(FreeJacobiError):
    """Root bracketing failed.

    Attributes
    ----------
    trace : list of (float, float)
        Scanned (x, f(x)) pairs.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class QuadratureError(FreeJacobiError):
    """Adaptive quadrature did not meet its tolerance."""


class IdentityError(FreeJacobiError):
    """A built-in algebraic identity check failed."""


class ConfigError(FreeJacobiError, ValueError):
    """Invalid simulation or command configuration."""


class DensityError(FreeJacobiError):
    """Recovered density is negative beyond the discretization tolerance."""
