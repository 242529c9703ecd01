"""Exception types shared across the library."""


class GmcLabError(Exception):
    """Base class for all library errors."""


class ValidationError(GmcLabError):
    """A parameter violates one of the documented invariants."""


class NotPositiveDefiniteError(GmcLabError):
    """Covariance matrix failed Cholesky even at maximum diagonal jitter.

    Usually signals an invalid field specification, e.g. a lambda-rescaled
    field evaluated over a window wider than its scale.
    """


class OutOfDomainError(GmcLabError):
    """Query point outside the grid or mass domain."""


class InsufficientMassError(GmcLabError):
    """A hitting-time query asked for more mass than the realization holds."""


class ScaleMismatchError(GmcLabError):
    """Cross-scale comparison between measures on different grids."""


class DegenerateTailError(GmcLabError):
    """Quadrature for the restricted-range inverse density did not converge."""


class TooFewSamplesError(GmcLabError):
    """Two-sample test called with fewer samples than its validity floor."""


class LengthMismatchError(GmcLabError):
    """Paired-sample test called with vectors of different lengths."""


class DegenerateDesignError(GmcLabError):
    """Regression design with no spread in the abscissae."""


class ConfigError(GmcLabError):
    """Experiment configuration is inconsistent with the requested run."""


class ParseError(ConfigError):
    """Config file syntax error, with 1-based location."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class EmitError(GmcLabError):
    """Refusing to serialize malformed output (e.g. NaN in a CSV cell)."""
