"""Exception types shared across the library."""


class LieGdtError(Exception):
    """Base class for all library-specific errors."""

    status = "error"


class SingularMatrixError(LieGdtError):
    """Matrix is singular (|det| below the invertibility floor)."""

    status = "singular"


class NoConvergenceError(LieGdtError):
    """Iterative solver failed to reach its tolerance within the iteration cap."""

    status = "no_convergence"

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class DegenerateProjectionError(LieGdtError):
    """Nearest-rotation projection is not unique for this input."""

    status = "degenerate_projection"


class IllConditionedError(LieGdtError):
    """A linear solve exceeded the permitted condition-number bound."""

    status = "ill_conditioned"


class MatExpRangeError(LieGdtError):
    """Matrix norm exceeds the documented bound for the exponential."""

    status = "range_error"


class TrainingDivergedError(LieGdtError):
    """Training loss became non-finite."""

    status = "diverged"

    def __init__(self, message, step=None, recent_losses=None):
        super().__init__(message)
        self.step = step
        self.recent_losses = recent_losses
