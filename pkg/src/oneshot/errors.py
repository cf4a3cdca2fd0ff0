"""Exception types raised across the package."""


class TeachingError(ValueError):
    """Base class for domain errors."""


class DimensionMismatchError(TeachingError):
    pass


class DegenerateInputError(TeachingError):
    pass


class StepSizeTooLargeError(TeachingError):
    """Raised when fixed-step gradient descent keeps increasing its loss."""


class NoSignChangeError(TeachingError):
    pass


class InfeasibleScalarError(TeachingError):
    """No real teaching scalar exists for the requested label.

    ``min_abs_label`` is set when a larger label magnitude would restore
    feasibility (square loss only).
    """

    def __init__(self, message, min_abs_label=None):
        super().__init__(message)
        self.min_abs_label = min_abs_label


class ConfigError(TeachingError):
    pass
