"""Exception types raised by relaxlab."""


class RelaxLabError(Exception):
    """Base class for all package errors."""


class ConfigError(RelaxLabError, ValueError):
    """Invalid configuration. ``errors`` holds every problem found."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class DensityError(RelaxLabError, ValueError):
    pass


class ModelError(RelaxLabError, ValueError):
    pass


class CFLError(RelaxLabError, ValueError):
    pass


class SolverError(RelaxLabError, RuntimeError):
    """Raised when a time integration produces a non-finite state."""


class ContractionError(RelaxLabError, ValueError):
    """Picard map is not a contraction for the requested horizon."""

    def __init__(self, factor, max_time):
        self.factor = factor
        self.max_time = max_time
        super().__init__(
            f"contraction factor {factor:.6g} >= 1; largest admissible T is {max_time:.6g}"
        )


class ConvergenceError(RelaxLabError, RuntimeError):
    def __init__(self, message, residuals):
        self.residuals = list(residuals)
        super().__init__(message)


class SupportError(RelaxLabError, ValueError):
    """A cone or test function reaches outside the trustworthy region."""
