"""Exception types shared across the toolkit."""


class LieesError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(LieesError):
    """A constructor or operation argument is out of its admissible range."""


class InvalidDomainError(LieesError):
    """A domain interval does not satisfy the operation's requirements."""


class NumericFailureError(LieesError):
    """A numeric routine produced a nonfinite or non-convergent result."""


class CalibrationError(LieesError):
    """Sign or field calibration against the bracket oracle failed."""


class ResolutionError(LieesError):
    """Sampling resolution is too coarse for the fastest harmonic present."""


class DivergenceError(LieesError):
    """Integrated state left the admissible range; carries the last finite time."""

    def __init__(self, message: str, last_time: float):
        super().__init__(message)
        self.last_time = last_time


class ConstructionError(LieesError):
    """A system builder rejected its configuration (resonance or excitation gate)."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class InsufficientSignalError(LieesError):
    """An envelope has too little signal above its residual floor to fit."""
