"""Exception hierarchy shared by every module of the package."""


class ConicHeatError(Exception):
    """Base class for all errors raised by the package."""


class InvalidGeometryError(ConicHeatError, ValueError):
    """Raised for nonsensical geometric input (nonpositive length, bad dimension)."""


class SpectrumParseError(ConicHeatError, ValueError):
    """Raised when a spectrum file cannot be parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int or None
        1-based line number of the offending line, if known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedOperationError(ConicHeatError):
    """Raised when an operation needs data the geometry does not carry."""


class SingularityError(ConicHeatError, ValueError):
    """Raised when a function is evaluated at a singular point."""


class PoleError(SingularityError):
    """Pole of a meromorphic function.

    Attributes
    ----------
    location : complex
        Position of the pole.
    order : int
        Order of the pole.
    residue_sign : int or None
        Sign of the leading Laurent coefficient, when real.
    """

    def __init__(self, message, location, order=1, residue_sign=None):
        self.location = location
        self.order = order
        self.residue_sign = residue_sign
        super().__init__(message)


class DiagonalSingularityError(SingularityError):
    """Raised when a kernel that is singular on the diagonal is evaluated there."""


class BesselOverflowError(ConicHeatError, OverflowError):
    """Raised when an unscaled Bessel value is not representable."""


class QuadratureError(ConicHeatError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Attributes
    ----------
    value, error : float or complex
        Best estimate and its error estimate at the time of failure.
    worst_interval : tuple of float
        Interval carrying the largest local error estimate.
    worst_error : float
        Local error estimate on that interval.
    """

    def __init__(self, message, value=None, error=None, worst_interval=None, worst_error=None):
        self.value = value
        self.error = error
        self.worst_interval = worst_interval
        self.worst_error = worst_error
        if worst_interval is not None:
            message = (f"{message} (worst interval [{worst_interval[0]:.6g}, "
                       f"{worst_interval[1]:.6g}] with local error {worst_error:.3g})")
        super().__init__(message)


class TruncationError(ConicHeatError):
    """A mode sum did not converge within the available modes.

    Attributes
    ----------
    last_term : float
        Magnitude of the last included term.
    bound : float
        Estimated bound on the omitted tail.
    """

    def __init__(self, message, last_term=float("nan"), bound=float("nan")):
        self.last_term = last_term
        self.bound = bound
        super().__init__(f"{message} (last term {last_term:.3e}, tail bound {bound:.3e})")


class ContourError(ConicHeatError, ValueError):
    """Raised for a contour whose rays do not decay."""


class ConditioningError(ConicHeatError):
    """Least-squares design matrix too ill-conditioned.

    Attributes
    ----------
    condition_number : float
    suggestion : str
        Advice on how to widen the sampling grid.
    """

    def __init__(self, message, condition_number, suggestion=""):
        self.condition_number = condition_number
        self.suggestion = suggestion
        super().__init__(f"{message} (condition number {condition_number:.3e}). {suggestion}".strip())


class RegimeError(ConicHeatError):
    """A fit residual shows the samples are outside the asymptotic regime."""


class ModelRejectionError(ConicHeatError):
    """A trace model failed its residual or splice checks."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class PoleProximityError(ConicHeatError, ValueError):
    """Zeta evaluation requested too close to a pole; use the Laurent API."""


class UndefinedDeterminantError(ConicHeatError):
    """The zeta function has a pole at zero, so no determinant is defined."""

    def __init__(self, message, residue):
        self.residue = residue
        super().__init__(f"{message} (residue {residue:.6g})")


class FitError(ConicHeatError):
    """No clean leading order could be extracted from samples."""

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)
