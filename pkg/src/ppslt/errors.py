"""Exception hierarchy shared by all modules.

Validation problems derive from :class:`ValidationError` (CLI exit code 2),
numerical failures from :class:`NumericalError` (CLI exit code 3).
"""


class PpsltError(Exception):
    pass


class ValidationError(PpsltError, ValueError):
    pass


class DomainError(ValidationError):
    """An argument lies outside the range where a model is defined."""


class ConfigError(ValidationError):
    pass


class ParseError(ValidationError):
    pass


class ResolutionError(ValidationError):
    """A sampling grid is too coarse for the requested quantity."""


class GeometryError(ValidationError):
    """The transverse phase-matching condition has no real solution."""


class NumericalError(PpsltError):
    pass


class NotFoundError(NumericalError):
    pass


class CalibrationError(NumericalError):
    pass


class FitError(NumericalError):
    """Fit did not converge; ``best`` holds the last parameter vector."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class AliasingWarning(UserWarning):
    pass


class IdentifiabilityWarning(UserWarning):
    pass
