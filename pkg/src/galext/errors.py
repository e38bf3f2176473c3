"""Exception hierarchy for galext."""


class GalextError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(GalextError, ValueError):
    pass


class IncompatibleStatesError(GalextError, ValueError):
    pass


class LatticeMismatchError(GalextError, ValueError):
    """A mass does not sit on the conjugate lattice of the s-grid."""


class OutOfBoxError(GalextError, RuntimeError):
    """A wave packet reached the periodic boundary.

    ``step`` holds the offending propagation step when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NonConvergentStateError(GalextError, ValueError):
    """The field has weight on the zero-mass component, so 1/M is undefined."""


class UnsupportedFeatureError(GalextError, NotImplementedError):
    pass


class InvalidProbeError(GalextError, ValueError):
    pass


class InsufficientDataError(GalextError, ValueError):
    pass


class ConfigError(GalextError, ValueError):
    pass


class SnapshotVersionError(GalextError, ValueError):
    pass


class CorruptSnapshotError(GalextError, ValueError):
    pass
