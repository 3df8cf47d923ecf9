"""Exception types raised across the package."""


class SleeperLocError(Exception):
    """Base class for every error this package raises deliberately."""


class DegenerateConfiguration(SleeperLocError):
    """Point configuration or matrix is singular (collinear or duplicate points)."""


class WrongArity(SleeperLocError):
    """An operation received the wrong number of inputs."""


class PointAtInfinity(SleeperLocError):
    """A projective mapping sent a point to infinity (homogeneous w ~ 0)."""


class ZeroBaseline(SleeperLocError):
    """Calibration baseline has no extent along the track axis."""


class NegativeDistance(SleeperLocError):
    """A pixel distance that must be non-negative was negative."""


class OutOfRoute(SleeperLocError):
    """Mileage falls outside the route extent."""


class InfeasibleProfile(SleeperLocError):
    """Speed profile cannot fit its acceleration/braking ramps into an interval."""


class ConfigInvalid(SleeperLocError):
    """Scenario or calibration configuration violates its schema."""


class InputKindMismatch(SleeperLocError):
    """A detector was fed input of the wrong kind (raster vs. oracle)."""


class NonPositiveInterval(SleeperLocError):
    """A time interval that must be positive was zero or negative."""


class EmptySeries(SleeperLocError):
    """An error metric was requested over an empty series."""


class LengthMismatch(SleeperLocError):
    """Paired series have different lengths."""


class UnknownFormat(SleeperLocError):
    """Requested output format is not one of the supported names."""
