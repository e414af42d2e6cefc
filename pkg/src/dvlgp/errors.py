"""Exception hierarchy shared by the library and the CLI.

The CLI maps each family to an exit code: ``ConfigError`` -> 2,
``InputError`` -> 3, ``NumericalError`` -> 4.
"""


class DvlgpError(Exception):
    """Base class for all package errors."""


class ConfigError(DvlgpError):
    """Invalid or inconsistent configuration."""


class InputError(DvlgpError):
    """Malformed, missing or misaligned input data."""


class NumericalError(DvlgpError):
    """A numerical procedure failed (factorization, divergence, ...)."""


class GeometryError(NumericalError):
    """Beam transformation matrix is rank deficient."""


class CholeskyError(NumericalError):
    def __init__(self, message: str, jitter: float):
        super().__init__(message)
        self.jitter = jitter


class TrainingError(NumericalError):
    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class FilterFault(NumericalError):
    """Kalman update could not be carried out."""
