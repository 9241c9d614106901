"""Exception hierarchy shared by every module of the package."""


class EigenfibreError(Exception):
    """Base class for all package errors."""


class DegenerateInput(EigenfibreError, ValueError):
    pass


class TangencyViolation(EigenfibreError, ValueError):
    pass


class RetractFailed(EigenfibreError, ValueError):
    pass


class InvalidPoint(EigenfibreError, ValueError):
    pass


class DegeneratePoint(EigenfibreError, ValueError):
    """Raised at critical (or nearly critical) points of a field."""


class InsufficientSamples(EigenfibreError, ValueError):
    pass


class IndexOutOfRange(EigenfibreError, ValueError):
    pass


class NotIsotropic(EigenfibreError, ValueError):
    pass


class SingularMatrix(EigenfibreError, ValueError):
    pass


class ZeroCoefficient(EigenfibreError, ValueError):
    pass


class MixedFamilies(EigenfibreError, ValueError):
    pass


class PhaseDependentField(EigenfibreError, ValueError):
    """A field on complex projective space that is not well defined on the quotient."""


class FibreNotFound(EigenfibreError, RuntimeError):
    """Newton search failed to land on the requested fibre.

    The best point seen is kept on the exception so callers can inspect
    it (a failed search near a critical value is informative in itself).
    """

    def __init__(self, message, best_point=None, best_residual=float("inf")):
        super().__init__(message)
        self.best_point = best_point
        self.best_residual = best_residual


class ProjectionFailed(EigenfibreError, RuntimeError):
    pass


class ConfigError(EigenfibreError, ValueError):
    pass
