"""Exception types raised across the package."""


class GreenLameError(Exception):
    """Base class for all package errors."""


class PoleError(GreenLameError, ValueError):
    """Argument too close to a pole (a lattice point or a configuration point)."""


class DegenerateError(GreenLameError, ValueError):
    """A formula is undefined at the given data (coinciding values, zero divisor)."""


class ConvergenceError(GreenLameError, RuntimeError):
    """An iterative solver did not reach its tolerance."""


class SingularJacobianError(ConvergenceError):
    """Newton hit a (numerically) singular Jacobian."""


class InconsistencyError(GreenLameError, RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


class UnsupportedError(GreenLameError, ValueError):
    """Requested case is outside what is implemented (e.g. closed forms for n >= 3)."""


class QuadratureBudgetError(GreenLameError, RuntimeError):
    """Adaptive quadrature exhausted its refinement budget."""
