"""Simulation and moment analytics for multivariate COGARCH(1,1) covariance processes."""

from .exceptions import (
    ConfigError,
    MucogarchError,
    NonDiagonalizableError,
    NotPositiveSemidefiniteError,
    SingularOperatorError,
)
from .kronalg import (
    KronOperators,
    SpectralData,
    build_operators,
    diagonalize,
    matrix_exp,
    psd_sqrt,
)
from .levy import (
    EpsilonLaw,
    JumpStream,
    LevySpec,
    constant_mix,
    exponential_mix,
    gamma_mix,
    sample_jumps,
)
from .sim import ModelParams, PathSample, simulate_path

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EpsilonLaw",
    "JumpStream",
    "KronOperators",
    "LevySpec",
    "ModelParams",
    "MucogarchError",
    "NonDiagonalizableError",
    "NotPositiveSemidefiniteError",
    "PathSample",
    "SingularOperatorError",
    "SpectralData",
    "build_operators",
    "constant_mix",
    "diagonalize",
    "exponential_mix",
    "gamma_mix",
    "matrix_exp",
    "psd_sqrt",
    "sample_jumps",
    "simulate_path",
    "__version__",
]
