"""Exception hierarchy shared by all modules."""


class TomoentError(Exception):
    """Base class for every error raised by this package."""


class NormalizationError(TomoentError, ValueError):
    """A state or density failed its normalization check."""

    def __init__(self, message, deficit=None):
        super().__init__(message)
        self.deficit = deficit


class ConvergenceError(TomoentError):
    """Fock-space truncation is too small for the requested state or evolution."""


class GridTooSmallError(NormalizationError):
    """The quadrature grid does not carry the full tomogram weight."""


class DensityMatrixError(TomoentError, ValueError):
    """A reduced density matrix has a significantly negative eigenvalue."""


class DegenerateSeriesError(TomoentError, ValueError):
    """A time series cannot support the requested nonlinear analysis."""


class ConfigError(TomoentError, ValueError):
    """Invalid experiment configuration."""
