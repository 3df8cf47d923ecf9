"""Projective mapping between the forward camera plane and the aerial view.

The two image planes are related by a single 3x3 homography acting on
homogeneous pixel coordinates.  Because the camera is rigidly mounted, the
map is estimated once from four hand-picked point correspondences and then
applied unchanged to every frame.  Along the track axis the aerial view is
metric up to one constant, the pixel-per-meter ratio, which is calibrated
from a single baseline of known length (e.g. two adjacent sleeper centers).

All values are immutable after construction and every operation is a pure
function, so everything here is safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ConfigInvalid,
    DegenerateConfiguration,
    NegativeDistance,
    PointAtInfinity,
    WrongArity,
    ZeroBaseline,
)

# Pivot/determinant magnitude below which a configuration is treated as
# genuinely collinear rather than ill-conditioned.  Pixel coordinates are
# O(1e2), so degeneracy and round-off are well separated at this scale.
_SINGULAR_TOL = 1e-12

# Homogeneous third coordinate below which a mapped point is at infinity.
_W_TOL = 1e-12


@dataclass(frozen=True)
class PixelPoint:
    """An image-plane location in pixels; x runs horizontal, y vertical."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"pixel point must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class PointPair:
    """One correspondence: ``source`` in the front view, ``target`` in the aerial view."""

    source: PixelPoint
    target: PixelPoint


@dataclass(frozen=True, eq=False)
class Homography:
    """A 3x3 projective map on homogeneous pixel coordinates.

    The matrix is rescaled so that ``m[2, 2] == 1`` exactly, which makes
    matrices from different estimation runs directly comparable.  Matrices
    whose bottom-right entry or determinant vanish are rejected as
    degenerate.
    """

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("homography must be a finite 3x3 matrix")
        if abs(m[2, 2]) <= _SINGULAR_TOL:
            raise DegenerateConfiguration("matrix cannot be scaled to m[2,2] == 1")
        m = m / m[2, 2]
        m[2, 2] = 1.0
        if abs(np.linalg.det(m)) <= _SINGULAR_TOL:
            raise DegenerateConfiguration("homography matrix is singular")
        m.flags.writeable = False
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> Homography:
        return cls(np.eye(3))


@dataclass(frozen=True)
class PixelScale:
    """Pixels per meter along the track axis of the aerial view."""

    pixels_per_meter: float

    def __post_init__(self):
        if not (math.isfinite(self.pixels_per_meter) and self.pixels_per_meter > 0):
            raise ValueError(f"pixel scale must be positive, got {self.pixels_per_meter}")


def _solve_pivoted(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Raises DegenerateConfiguration when the best available pivot falls below
    the singularity tolerance, which for point-pair systems happens exactly
    when three points are collinear or two coincide.
    """
    a = a.astype(float).copy()
    b = b.astype(float).copy()
    n = a.shape[0]
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot_row, col]) <= _SINGULAR_TOL:
            raise DegenerateConfiguration("linear system is singular (collinear or duplicate points)")
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            b[[col, pivot_row]] = b[[pivot_row, col]]
        factors = a[col + 1:, col] / a[col, col]
        a[col + 1:, col:] -= np.outer(factors, a[col, col:])
        b[col + 1:] -= factors * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x


def estimate_homography(pairs: Sequence[PointPair]) -> Homography:
    """Fit the exact map sending each of four source points to its target.

    With the bottom-right entry pinned to 1, the remaining eight entries
    satisfy, for each correspondence (x, y) -> (u, v),

        m00*x + m01*y + m02 - u*(m20*x + m21*y) = u
        m10*x + m11*y + m12 - v*(m20*x + m21*y) = v

    which is an 8x8 linear system solved directly; no iteration is needed
    and the four defining targets are reproduced to machine precision.
    """
    if len(pairs) != 4:
        raise WrongArity(f"exactly 4 point pairs are required, got {len(pairs)}")
    a = np.zeros((8, 8))
    b = np.zeros(8)
    for i, pair in enumerate(pairs):
        x, y = pair.source.x, pair.source.y
        u, v = pair.target.x, pair.target.y
        a[2 * i] = (x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y)
        b[2 * i] = u
        a[2 * i + 1] = (0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y)
        b[2 * i + 1] = v
    h = _solve_pivoted(a, b)
    return Homography(np.array([
        [h[0], h[1], h[2]],
        [h[3], h[4], h[5]],
        [h[6], h[7], 1.0],
    ]))


def apply_homography(h: Homography, p: PixelPoint) -> PixelPoint:
    """Map a point through ``h``, projecting back from homogeneous coordinates."""
    vec = h.m @ (p.x, p.y, 1.0)
    w = vec[2]
    if abs(w) <= _W_TOL:
        raise PointAtInfinity(f"point ({p.x}, {p.y}) maps to infinity (w={w})")
    return PixelPoint(vec[0] / w, vec[1] / w)


def invert_homography(h: Homography) -> Homography:
    """Inverse map, normalized the same way as the forward one."""
    det = np.linalg.det(h.m)
    if abs(det) <= _SINGULAR_TOL:
        raise DegenerateConfiguration("homography is not invertible")
    return Homography(np.linalg.inv(h.m))


def warp_raster(h: Homography, src, out_width: int, out_height: int) -> np.ndarray:
    """Resample ``src`` under ``h`` onto an ``out_height x out_width`` grid.

    ``h`` maps source pixel coordinates to output pixel coordinates; each
    output pixel is sampled at its inverse image with bilinear interpolation.
    Samples falling outside the source contribute intensity 0, as do output
    pixels whose inverse image lies at infinity.
    """
    src = np.asarray(src, dtype=float)
    if src.ndim != 2 or src.size == 0:
        raise ValueError("source raster must be a non-empty 2D grid")
    if out_width < 1 or out_height < 1:
        raise ValueError("output dimensions must be at least 1x1")
    inv = invert_homography(h).m

    xs, ys = np.meshgrid(np.arange(out_width, dtype=float),
                         np.arange(out_height, dtype=float))
    w = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / w
        sy = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / w
    bad = (np.abs(w) <= _W_TOL) | ~np.isfinite(sx) | ~np.isfinite(sy)
    # Park bad samples far outside the source so the gather masks zero them.
    sx = np.where(bad, -2.0, sx)
    sy = np.where(bad, -2.0, sy)

    h_src, w_src = src.shape
    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    fx = sx - x0
    fy = sy - y0

    out = np.zeros((out_height, out_width))
    for dy, dx, weight in (
        (0, 0, (1 - fx) * (1 - fy)),
        (0, 1, fx * (1 - fy)),
        (1, 0, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        yi = y0 + dy
        xi = x0 + dx
        inside = (yi >= 0) & (yi < h_src) & (xi >= 0) & (xi < w_src)
        vals = src[np.clip(yi, 0, h_src - 1), np.clip(xi, 0, w_src - 1)]
        out += np.where(inside, weight * vals, 0.0)
    return out


def calibrate_pixel_scale(aerial_pair: Sequence[PixelPoint], world_distance: float) -> PixelScale:
    """Pixel-per-meter ratio from two aerial points a known distance apart.

    The two points must lie on the track axis, so only their y separation
    carries metric information.
    """
    if len(aerial_pair) != 2:
        raise WrongArity(f"exactly 2 axis points are required, got {len(aerial_pair)}")
    if world_distance <= 0 or not math.isfinite(world_distance):
        raise ZeroBaseline(f"world distance must be positive, got {world_distance}")
    dy = aerial_pair[1].y - aerial_pair[0].y
    if dy == 0.0:
        raise ZeroBaseline("axis points coincide along the track axis")
    return PixelScale(abs(dy) / world_distance)


def pixel_to_world(scale: PixelScale, theta_p: float) -> float:
    """Convert a pixel distance along the track axis to meters."""
    if theta_p < 0:
        raise NegativeDistance(f"pixel distance must be non-negative, got {theta_p}")
    return theta_p / scale.pixels_per_meter


def load_calibration(path) -> tuple[list[PointPair], tuple[PixelPoint, PixelPoint], float]:
    """Read a view-calibration file.

    Expected JSON shape::

        {"pairs": [[xf, yf, xa, ya], ...4 entries...],
         "axis_points": [[x1, y1], [x2, y2]],
         "axis_world_m": 0.6}

    Returns the point pairs, the two aerial axis points, and the baseline
    length in meters.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: not valid JSON ({exc})") from exc
    try:
        raw_pairs = doc["pairs"]
        raw_axis = doc["axis_points"]
        world = float(doc["axis_world_m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"{path}: missing or malformed calibration fields") from exc
    if len(raw_pairs) != 4 or any(len(entry) != 4 for entry in raw_pairs):
        raise ConfigInvalid(f"{path}: 'pairs' must hold 4 entries of [xf, yf, xa, ya]")
    if len(raw_axis) != 2 or any(len(entry) != 2 for entry in raw_axis):
        raise ConfigInvalid(f"{path}: 'axis_points' must hold 2 entries of [x, y]")
    pairs = [
        PointPair(PixelPoint(float(xf), float(yf)), PixelPoint(float(xa), float(ya)))
        for xf, yf, xa, ya in raw_pairs
    ]
    axis = (
        PixelPoint(float(raw_axis[0][0]), float(raw_axis[0][1])),
        PixelPoint(float(raw_axis[1][0]), float(raw_axis[1][1])),
    )
    return pairs, axis, world
