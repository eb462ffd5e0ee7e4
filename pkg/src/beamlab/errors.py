"""Exception hierarchy shared by the simulation, detection and CLI layers."""


class BeamlabError(Exception):
    """Base class for all package errors."""


class ConfigError(BeamlabError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class ResourceLimitError(BeamlabError):
    """A configured size cap (truncation order, sample count) was exceeded."""


class IntegrationError(BeamlabError):
    """The time integrator could not continue.

    Attributes
    ----------
    t : float
        Time at which the step controller gave up.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class NoPrevailingModeError(BeamlabError):
    """Initial data (and forcing) do not single out a prevailing mode."""


class BracketError(BeamlabError, ValueError):
    """Threshold-search endpoints do not bracket the stable/unstable transition."""


class MismatchError(BeamlabError, ValueError):
    """Verdict and certificate refer to different truncations or horizons."""
