"""Exception hierarchy shared across the package."""


class FgclockError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(FgclockError, ValueError):
    """A model or estimator parameter is outside its domain."""


class ShapeError(FgclockError, ValueError):
    """Sequence lengths are inconsistent with each other or with the config."""


class DegenerateModelError(FgclockError, ValueError):
    """sigma = 0 requested where the Gauss-Markov density is degenerate."""


class SizeError(FgclockError, ValueError):
    """Problem size exceeds what an exhaustive solver supports."""


class ConvergenceError(FgclockError, RuntimeError):
    """Iterative solver did not reach its tolerance within max_iters.

    Carries the last iterate so callers can inspect how far it got.
    """

    def __init__(self, message, last_path=None):
        super().__init__(message)
        self.last_path = last_path


class GridCoverageError(FgclockError, RuntimeError):
    """The discretization grid does not cover the feasible optimum."""
