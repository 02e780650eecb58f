"""Flow-force bounds for steady water waves with vorticity: laminar streams,
diagnostics, dispersion, a height-function wave solver and a verifier."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    ConvergenceError,
    DegeneracyError,
    DomainError,
    NoRootError,
    OutOfRangeError,
    RegimeError,
    WaveforceError,
)
from .vorticity import VorticityModel  # noqa: F401
