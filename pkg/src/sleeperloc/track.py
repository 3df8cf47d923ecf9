"""Physical route model: stations, the sleeper lattice, and camera coverage.

Mileage is measured in meters from the first station.  Sleepers sit at
``phase + k * spacing`` for integer k >= 0.  The camera sees a strip of
track that starts ``blind_distance`` meters ahead of the train front and
extends ``visible_length`` meters beyond that; positions inside the strip
are expressed either in meters from the strip's near edge or in pixels via
the aerial-view scale.

Everything is immutable after construction and all queries are pure.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import OutOfRoute
from .geometry import PixelScale

# Slack used when deciding whether a sleeper sits exactly on a window edge.
_EDGE_EPS = 1e-9


@dataclass(frozen=True)
class Route:
    """A linear route: ordered station mileages plus optional tunnel extents."""

    station_mileages: tuple[float, ...]
    total_length: float
    tunnel_segments: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        stations = tuple(float(s) for s in self.station_mileages)
        if len(stations) < 2:
            raise ValueError("a route needs at least two stations")
        if stations[0] != 0.0:
            raise ValueError(f"first station must sit at mileage 0, got {stations[0]}")
        if any(b <= a for a, b in zip(stations, stations[1:])):
            raise ValueError("station mileages must be strictly increasing")
        if not math.isfinite(self.total_length) or stations[-1] > self.total_length:
            raise ValueError("total length must be finite and reach the last station")
        tunnels = tuple((float(a), float(b)) for a, b in self.tunnel_segments)
        for a, b in tunnels:
            if not (0.0 <= a < b <= self.total_length):
                raise ValueError(f"tunnel segment ({a}, {b}) outside route")
        for (_, b), (a2, _) in zip(tunnels, tunnels[1:]):
            if a2 < b:
                raise ValueError("tunnel segments must not overlap")
        object.__setattr__(self, "station_mileages", stations)
        object.__setattr__(self, "tunnel_segments", tunnels)

    @property
    def interval_count(self) -> int:
        return len(self.station_mileages) - 1


@dataclass(frozen=True)
class SleeperLattice:
    """Periodic sleeper positions: ``phase + k * spacing`` meters, k >= 0."""

    spacing: float
    phase: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"sleeper spacing must be positive, got {self.spacing}")
        if not (0.0 <= self.phase < self.spacing):
            raise ValueError(f"phase must lie in [0, spacing), got {self.phase}")


@dataclass(frozen=True)
class CameraGeometry:
    """Aerial-strip coverage of the forward camera.

    The strip is square in pixels (``strip_pixels`` per side) and spans
    ``visible_length`` meters along the track, so the scale must satisfy
    ``visible_length * pixels_per_meter ~= strip_pixels`` to within a pixel.
    """

    blind_distance: float
    visible_length: float
    scale: PixelScale
    strip_pixels: int

    def __post_init__(self):
        if self.blind_distance < 0 or not math.isfinite(self.blind_distance):
            raise ValueError(f"blind distance must be >= 0, got {self.blind_distance}")
        if self.visible_length <= 0 or not math.isfinite(self.visible_length):
            raise ValueError(f"visible length must be positive, got {self.visible_length}")
        if self.strip_pixels < 1:
            raise ValueError(f"strip needs at least one pixel, got {self.strip_pixels}")
        extent_px = self.visible_length * self.scale.pixels_per_meter
        if abs(extent_px - self.strip_pixels) > 1.0:
            raise ValueError(
                f"visible length maps to {extent_px:.2f} px but the strip is "
                f"{self.strip_pixels} px tall")


def nearest_sleeper_phase(lattice: SleeperLattice, front_mileage: float) -> float:
    """Distance from the train front to the first sleeper at or ahead of it.

    Always in ``[0, spacing)``; exactly 0 when the front sits on a sleeper.
    """
    return (lattice.phase - front_mileage) % lattice.spacing


def visible_sleepers(
    lattice: SleeperLattice, cam: CameraGeometry, front_mileage: float,
) -> list[tuple[float, float]]:
    """Sleepers inside the camera strip, nearest first.

    Returns ``(world_mileage, strip_offset_m)`` tuples where the offset is
    measured from the strip's near edge (``front_mileage + blind_distance``).
    Both window edges are inclusive.
    """
    start = front_mileage + cam.blind_distance
    end = start + cam.visible_length
    k_first = math.ceil((start - lattice.phase) / lattice.spacing - _EDGE_EPS)
    k_last = math.floor((end - lattice.phase) / lattice.spacing + _EDGE_EPS)
    out = []
    for k in range(k_first, k_last + 1):
        mileage = lattice.phase + k * lattice.spacing
        out.append((mileage, mileage - start))
    return out


def interval_of(route: Route, mileage: float) -> int:
    """Index of the station interval containing ``mileage``.

    Intervals are half-open at station boundaries, except the final one,
    which is closed on the right; mileage past the last station (but still
    on the route) belongs to the final interval.
    """
    if not (0.0 <= mileage <= route.total_length):
        raise OutOfRoute(
            f"mileage {mileage} outside route [0, {route.total_length}]")
    idx = bisect_right(route.station_mileages, mileage) - 1
    return min(idx, route.interval_count - 1)


def interval_label(route: Route, index: int) -> str:
    """Human-readable station-interval name, stations numbered from 1."""
    if not (0 <= index < route.interval_count):
        raise OutOfRoute(f"no interval with index {index}")
    return f"{index + 1}-{index + 2}"
