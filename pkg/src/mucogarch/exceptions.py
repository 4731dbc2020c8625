"""Typed exceptions shared across the package."""


class MucogarchError(Exception):
    """Base class for all package-specific errors."""


class NonDiagonalizableError(MucogarchError):
    """Raised when an eigenvector basis is too ill-conditioned to trust.

    Operations built on the twisted norm machinery refuse to run in this
    case; spectral and moment computations do not need the basis and keep
    working.
    """


class NotPositiveSemidefiniteError(MucogarchError):
    """Raised when a matrix required to be PSD has a genuinely negative eigenvalue."""


class SingularOperatorError(MucogarchError):
    """Raised when a moment-dynamics operator is (numerically) singular.

    Singularity means the stationarity hypotheses behind the closed-form
    moment formulas fail, so silently pseudo-inverting would produce
    meaningless numbers.
    """


class ConfigError(MucogarchError):
    """Raised for malformed or inconsistent experiment configuration."""
