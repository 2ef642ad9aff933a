"""Exception types raised across the package.

Every error derives from :class:`PtiaError`. Numeric failures additionally
derive from :class:`ValueError` so callers that only care about bad inputs
can catch the builtin.
"""


class PtiaError(Exception):
    """Base class for all package errors."""


class ConfigError(PtiaError):
    """A profile or key-value file could not be parsed or validated."""


class DomainError(PtiaError, ValueError):
    """An input lies outside the domain of an operation."""


class SingularBoostError(DomainError):
    """gm12/gm11 >= 1: the boosted transconductance is infinite or negative."""


class HeadroomError(DomainError):
    """v_dd <= v_th: the I-V converter gain is undefined."""


class SingularFeedbackError(DomainError):
    """A*gm2 = 1 (or >= 1 for the large-signal loop): the feedback pole is reached."""


class GainIndexError(DomainError, IndexError):
    """Programmable gain index j outside 1..p_max."""


class SolverError(PtiaError, ArithmeticError):
    """The nonlinear feedback solve failed to converge.

    Attributes
    ----------
    index : int or None
        Position of the failing point in the evaluated batch.
    residual : float
        Relative residual at the last iterate.
    i_sen : float or None
        Sensor current at the failing point, when known.
    """

    def __init__(self, message, *, index=None, residual=float("nan"), i_sen=None):
        super().__init__(message)
        self.index = index
        self.residual = residual
        self.i_sen = i_sen


class UndefinedTHDError(DomainError):
    """The fundamental is too small for THD to be meaningful."""


class DataFormatError(PtiaError):
    """Measurement data is malformed (missing columns, empty input)."""

    def __init__(self, message, *, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(DataFormatError):
    """A cell could not be parsed as a number."""


class DegenerateFitError(DomainError):
    """Regression input has fewer than two distinct abscissae."""


class NonInvertibleError(DomainError):
    """A calibration curve with zero slope cannot be inverted."""


class ExtrapolationError(DomainError):
    """A numeric corner query lies outside the tabulated range."""


class ExtrapolationWarning(UserWarning):
    """A calibration lookup fell outside the fitted concentration domain."""
