"""Exception hierarchy.  The CLI maps :class:`InputError` subclasses to exit
status 2 and verdict failures to exit status 1."""

from __future__ import annotations


class MorseflowError(Exception):
    pass


class InputError(MorseflowError):
    """Bad configuration or input data."""


class DomainError(InputError):
    """Point lies outside every chart."""


class ConfigurationError(InputError):
    pass


class UnsupportedError(InputError):
    pass


class PreconditionError(MorseflowError):
    pass


class DegeneracyError(MorseflowError):
    """A Hessian eigenvalue is within tolerance of zero."""


class NumericError(MorseflowError):
    pass


class EscapeError(NumericError):
    """Trajectory left the modelled manifold."""

    def __init__(self, message: str, exit_time: float):
        super().__init__(message)
        self.exit_time = exit_time


class StiffnessError(NumericError):
    pass


class GeometryError(NumericError):
    """Level-set parameterisation failed."""


class CertificationError(MorseflowError):
    def __init__(self, message: str, grid_step: float | None = None):
        super().__init__(message)
        self.grid_step = grid_step


class EmptyCarrierError(MorseflowError):
    pass


class CoverError(MorseflowError):
    pass


class ScheduleError(MorseflowError):
    pass
