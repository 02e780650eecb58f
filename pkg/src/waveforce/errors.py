"""Exception hierarchy shared by all modules."""


class WaveforceError(Exception):
    """Base class for every error raised by this package."""


class DomainError(WaveforceError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class NoRootError(WaveforceError):
    """A bracketing root search could not find a sign change."""


class OutOfRangeError(WaveforceError, ValueError):
    """A Bernoulli constant lies outside the admissible interval (R_c, R_0)."""


class RegimeError(WaveforceError):
    """A stream is in the wrong regime (critical/subcritical/supercritical)."""


class ConvergenceError(WaveforceError):
    """An iterative solver failed to reach its tolerance."""


class DegeneracyError(WaveforceError):
    """The height function lost unidirectionality (h_p too small)."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class ConfigError(WaveforceError, ValueError):
    """Invalid run configuration or malformed input file."""
