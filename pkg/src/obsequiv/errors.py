"""Exception types raised across the package."""


class ObsEquivError(Exception):
    """Base class for all package errors."""


class ExcludedSet(ObsEquivError):
    """The point lies on the measure-zero set of dyadic lines where the baker map is not bijective."""


class WidthExceeded(ObsEquivError):
    """More binary digits were requested than an exact point carries."""


class WindowExhausted(ObsEquivError):
    """A finite shift window has no coordinate left to move into the origin."""


class NoCell(ObsEquivError):
    """A point is not contained in any cell of a partition."""


class ResourceLimit(ObsEquivError):
    """A construction would exceed a configured size cap."""


class BadDistribution(ObsEquivError, ValueError):
    """A probability vector or transition row is negative or does not sum to one."""


class TooShort(ObsEquivError):
    """A sequence is too short for the requested statistic."""


class NoReturn(ObsEquivError):
    """A Markov state never returns to itself, so its period is undefined."""


class NotStationary(ObsEquivError):
    """A Markov model has no valid stationary vector."""


class DegenerateSequenceWarning(UserWarning):
    """Fewer than two distinct symbols occur in an estimated sequence."""
