"""Exception and warning types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters, grid settings or scenario configuration.

    ``field`` names the offending configuration entry when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ShapeError(ValueError):
    """Array length or grid mismatch between operands."""


class ConsistencyError(RuntimeError):
    """Cached position/momentum representations disagree."""


class NumericalAbort(RuntimeError):
    """Evolution aborted because a conservation check drifted too far."""


class BoundaryLeakWarning(UserWarning):
    """Wavefunction amplitude at the periodic box edge is not negligible."""
