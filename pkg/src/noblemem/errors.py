"""Exception types shared across the package."""


class NobleMemError(Exception):
    """Base class for all package errors."""


class GridMismatch(NobleMemError):
    """Two time series do not live on the same time grid."""


class StiffnessError(NobleMemError):
    """The integration step cannot resolve the fastest rate in the model."""


class ResolutionError(NobleMemError):
    """A requested time step is too coarse for the pulse being built."""


class NotNormalized(NobleMemError):
    """An envelope that must carry exactly one photon does not."""


class DegenerateRates(NobleMemError):
    """A rate combination puts a formula outside its domain (e.g. 0/0)."""


class InvalidRegime(NobleMemError):
    """A closed-form prescription produced a non-physical (<= 0) rate."""


class Unreachable(NobleMemError):
    """Control matching demands a negative stimulated rate.

    Carries ``interval`` as (t_start, t_end) of the offending region when
    available.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class NonConvergence(NobleMemError):
    """Optimizer hit its iteration budget before meeting the tolerance.

    ``result`` holds the best iterate found so far.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(NobleMemError):
    """A scenario configuration file failed validation."""
