class ParameterError(ValueError):
    """A parameter violates the precondition of the operation it was passed to."""


class HorizonError(ValueError):
    """Evaluation requested outside the simulated time horizon."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class StabilityError(ValueError):
    """A finite-difference grid violates its CFL condition."""
