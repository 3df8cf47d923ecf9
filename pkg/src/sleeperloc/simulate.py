"""Deterministic, seeded simulation of a run over a route.

A run is generated in three layers:

1. Kinematics: per station interval, a trapezoidal speed profile (ramp up,
   cruise, brake) integrated in closed form, so the ground truth carries no
   integration error and the train stops exactly on each station mileage.
   A configurable dwell is spent standing at every station.
2. Sensor corruption: measured speed is ``max(0, v*(1+bias) + N(0, sigma))``.
3. Observations: the sleepers inside the camera strip, each dropped with a
   miss probability and jittered in pixels, plus Poisson-distributed false
   positives placed uniformly over the strip.  Optionally a synthetic
   aerial raster is rendered per frame.

Determinism contract: a run is a pure function of its scenario config.  All
sensor/observation draws come from one PCG64 stream seeded by the config
seed and consumed in frame order (speed noise, per-sleeper miss draws,
per-sleeper pixel jitter, false-positive count, false-positive positions).
Raster noise uses a second stream derived from the same seed, so enabling
rasters does not change the observation layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detect import Detection
from .errors import InfeasibleProfile
from .geometry import PixelPoint
from .track import CameraGeometry, Route, SleeperLattice, visible_sleepers

# Painted sleeper band: fraction of the sleeper spacing, bright on dark.
_BAND_WIDTH_FRACTION = 0.1
_BAND_INTENSITY = 0.9
_BACKGROUND_INTENSITY = 0.2

# Tag mixed into the seed for the raster noise stream.
_RASTER_STREAM_TAG = 0x5AE1


def _per_interval(value, n: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        return (float(value),) * n
    vals = tuple(float(v) for v in value)
    if len(vals) != n:
        raise ValueError(f"{name} needs 1 or {n} values, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class SpeedProfile:
    """Trapezoidal speed plan: cruise/accel/decel per interval, dwell per station.

    Each field is a scalar applied everywhere or a sequence with one entry
    per interval (per station for ``dwell_s``).
    """

    cruise_speed: float | tuple[float, ...]
    accel: float | tuple[float, ...]
    decel: float | tuple[float, ...]
    dwell_s: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        for name in ("cruise_speed", "accel", "decel"):
            vals = getattr(self, name)
            vals = (vals,) if np.isscalar(vals) else vals
            if any(v <= 0 or not math.isfinite(v) for v in vals):
                raise ValueError(f"{name} values must be positive and finite")
        dwell = self.dwell_s
        dwell = (dwell,) if np.isscalar(dwell) else dwell
        if any(d < 0 or not math.isfinite(d) for d in dwell):
            raise ValueError("dwell_s values must be >= 0")


@dataclass(frozen=True)
class SensorModel:
    """Error model for the speed sensor and the sleeper observations."""

    speed_bias: float = 0.0
    speed_noise_sigma: float = 0.0
    detect_miss_prob: float = 0.0
    detect_pixel_sigma: float = 0.0
    false_positive_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.detect_miss_prob <= 1.0:
            raise ValueError(f"miss probability must be in [0,1], got {self.detect_miss_prob}")
        if self.speed_noise_sigma < 0 or self.detect_pixel_sigma < 0:
            raise ValueError("noise sigmas must be >= 0")
        if self.false_positive_rate < 0:
            raise ValueError("false positive rate must be >= 0")


@dataclass(frozen=True, eq=False)
class SimFrame:
    """One time step: truth, corrupted sensor reading, and observations.

    ``detection_is_fp`` flags which entries of ``oracle_detections`` were
    injected as false positives; the detections themselves carry no marker,
    so estimators cannot tell them apart.
    """

    t: float
    true_mileage: float
    true_speed: float
    measured_speed: float
    oracle_detections: tuple[Detection, ...] = ()
    detection_is_fp: tuple[bool, ...] = ()
    aerial_raster: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class SimRun:
    """A full simulated drive: frames plus the geometry they were built from."""

    frames: tuple[SimFrame, ...]
    route: Route
    lattice: SleeperLattice
    cam: CameraGeometry
    dt: float


@dataclass(frozen=True)
class _Segment:
    # Closed-form motion piece: x(t) = x0 + v0*dt + 0.5*a*dt^2 for local dt.
    t0: float
    x0: float
    v0: float
    a: float


def _build_segments(route: Route, profile: SpeedProfile) -> tuple[list[_Segment], float]:
    n_int = route.interval_count
    n_sta = n_int + 1
    cruise = _per_interval(profile.cruise_speed, n_int, "cruise_speed")
    accel = _per_interval(profile.accel, n_int, "accel")
    decel = _per_interval(profile.decel, n_int, "decel")
    dwell = _per_interval(profile.dwell_s, n_sta, "dwell_s")

    segments: list[_Segment] = []
    t = 0.0
    for i in range(n_int):
        x = route.station_mileages[i]
        if dwell[i] > 0:
            segments.append(_Segment(t, x, 0.0, 0.0))
            t += dwell[i]
        length = route.station_mileages[i + 1] - x
        v, a, d = cruise[i], accel[i], decel[i]
        d_acc = v * v / (2.0 * a)
        d_dec = v * v / (2.0 * d)
        if d_acc + d_dec - length > 1e-9:
            raise InfeasibleProfile(
                f"interval {i + 1}: ramps need {d_acc + d_dec:.2f} m "
                f"but only {length:.2f} m are available")
        segments.append(_Segment(t, x, 0.0, a))
        t += v / a
        t_cruise = max(0.0, (length - d_acc - d_dec)) / v
        if t_cruise > 0:
            segments.append(_Segment(t, x + d_acc, v, 0.0))
            t += t_cruise
        segments.append(_Segment(t, route.station_mileages[i + 1] - d_dec, v, -d))
        t += v / d
    if dwell[n_sta - 1] > 0:
        segments.append(_Segment(t, route.station_mileages[-1], 0.0, 0.0))
        t += dwell[n_sta - 1]
    # Terminal parking segment keeps evaluation total for any t >= end.
    segments.append(_Segment(t, route.station_mileages[-1], 0.0, 0.0))
    return segments, t


def generate_kinematics(
    route: Route, profile: SpeedProfile, dt: float,
) -> list[tuple[float, float, float]]:
    """Sampled ground-truth motion: ``(t, mileage, speed)`` at t_k = k*dt.

    Sampling runs from t = 0 until the first frame at or past the arrival
    time at the final station, where the train stays parked.
    """
    if dt <= 0 or not math.isfinite(dt):
        raise ValueError(f"dt must be positive, got {dt}")
    segments, t_end = _build_segments(route, profile)
    n_frames = math.ceil(t_end / dt - 1e-9) + 1

    t0s = np.array([s.t0 for s in segments])
    x0s = np.array([s.x0 for s in segments])
    v0s = np.array([s.v0 for s in segments])
    accs = np.array([s.a for s in segments])

    times = np.arange(n_frames) * dt
    idx = np.clip(np.searchsorted(t0s, times, side="right") - 1, 0, len(segments) - 1)
    local = times - t0s[idx]
    mileage = x0s[idx] + v0s[idx] * local + 0.5 * accs[idx] * local * local
    speed = v0s[idx] + accs[idx] * local
    # Frames at or beyond arrival are parked exactly at the route end.
    done = times >= t_end - 1e-12
    mileage[done] = route.station_mileages[-1]
    speed[done] = 0.0
    return list(zip(times.tolist(), mileage.tolist(), speed.tolist()))


def corrupt_speed(model: SensorModel, true_speed: float, rng: np.random.Generator) -> float:
    """One corrupted speed reading; clamped so it never goes negative.

    Exactly one normal draw is consumed per call, even at zero sigma, so
    the stream layout does not depend on the noise settings.
    """
    noise = model.speed_noise_sigma * rng.standard_normal()
    return max(0.0, true_speed * (1.0 + model.speed_bias) + noise)


def render_aerial_strip(
    lattice: SleeperLattice,
    cam: CameraGeometry,
    front_mileage: float,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Synthetic aerial strip: bright bands on a dark trackbed.

    Row 0 is the strip's near edge.  Each visible sleeper paints a band of
    width ``round(0.1 * spacing * pixels_per_meter)`` centered at its offset
    in pixels; boundary rows get fractional intensity proportional to their
    coverage, so band centroids match sleeper centers at sub-pixel accuracy.
    Additive Gaussian pixel noise is applied afterwards and the result is
    clamped to [0, 1].
    """
    n = cam.strip_pixels
    r = cam.scale.pixels_per_meter
    band_px = round(_BAND_WIDTH_FRACTION * lattice.spacing * r)
    profile = np.full(n, _BACKGROUND_INTENSITY)
    rows = np.arange(n)
    for _, offset_m in visible_sleepers(lattice, cam, front_mileage):
        center = offset_m * r
        lo = center - band_px / 2.0
        hi = center + band_px / 2.0
        # Fraction of each row cell [y-0.5, y+0.5] covered by the band.
        cover = np.clip(np.minimum(hi, rows + 0.5) - np.maximum(lo, rows - 0.5), 0.0, 1.0)
        profile = np.maximum(profile, _BACKGROUND_INTENSITY
                             + (_BAND_INTENSITY - _BACKGROUND_INTENSITY) * cover)
    strip = np.tile(profile[:, None], (1, n))
    if noise_sigma > 0 and rng is not None:
        strip = strip + noise_sigma * rng.standard_normal(strip.shape)
    return np.clip(strip, 0.0, 1.0)


def _observe_frame(
    lattice: SleeperLattice,
    cam: CameraGeometry,
    model: SensorModel,
    front_mileage: float,
    box_side_px: float,
    rng: np.random.Generator,
) -> tuple[tuple[Detection, ...], tuple[bool, ...]]:
    r = cam.scale.pixels_per_meter
    n_px = float(cam.strip_pixels)
    x_center = (cam.strip_pixels - 1) / 2.0
    truths = visible_sleepers(lattice, cam, front_mileage)
    k = len(truths)
    miss_draws = rng.random(k)
    jitter = rng.standard_normal(k)
    entries: list[tuple[float, bool]] = []
    for i, (_, offset_m) in enumerate(truths):
        if miss_draws[i] < model.detect_miss_prob:
            continue
        y = offset_m * r + model.detect_pixel_sigma * jitter[i]
        entries.append((min(max(y, 0.0), n_px), False))
    n_fp = int(rng.poisson(model.false_positive_rate))
    if n_fp:
        for y in rng.random(n_fp) * n_px:
            entries.append((float(y), True))
    entries.sort(key=lambda e: e[0])
    dets = tuple(Detection(PixelPoint(x_center, y), box_side_px, 1.0) for y, _ in entries)
    flags = tuple(is_fp for _, is_fp in entries)
    return dets, flags


def generate_run(config) -> SimRun:
    """Build a complete, reproducible run from a scenario config."""
    kin = generate_kinematics(config.route, config.profile, config.dt)
    rng = np.random.default_rng(config.sensor.seed)
    raster_rng = np.random.default_rng((config.sensor.seed, _RASTER_STREAM_TAG))
    frames = []
    for t, mileage, speed in kin:
        measured = corrupt_speed(config.sensor, speed, rng)
        dets, flags = _observe_frame(
            config.lattice, config.camera, config.sensor, mileage,
            config.box_side_px, rng)
        raster = None
        if config.render_raster:
            raster = render_aerial_strip(
                config.lattice, config.camera, mileage,
                config.raster_noise_sigma, raster_rng)
        frames.append(SimFrame(t, mileage, speed, measured, dets, flags, raster))
    return SimRun(tuple(frames), config.route, config.lattice, config.camera, config.dt)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_run_csv(run: SimRun, path) -> None:
    """Serialize a run to CSV.

    Header is ``t_s,true_mileage_m,true_speed_mps,measured_speed_mps,
    det_count,det_px_0,...`` with as many detection columns as the busiest
    frame needs; unused cells stay empty.  Detections are nearest-first.
    """
    max_dets = max((len(f.oracle_detections) for f in run.frames), default=0)
    cols = ["t_s", "true_mileage_m", "true_speed_mps", "measured_speed_mps", "det_count"]
    cols += [f"det_px_{i}" for i in range(max_dets)]
    lines = [",".join(cols)]
    for f in run.frames:
        ys = [_fmt(d.center_px.y) for d in f.oracle_detections]
        row = [_fmt(f.t), _fmt(f.true_mileage), _fmt(f.true_speed),
               _fmt(f.measured_speed), str(len(ys))]
        row += ys + [""] * (max_dets - len(ys))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_run_frames(path, box_side_px: float = 30.0, strip_pixels: int = 256) -> tuple[SimFrame, ...]:
    """Rebuild frames from a run CSV.

    Only the quantities the CSV carries are restored: detection confidences
    come back as 1.0 and box sides as ``box_side_px``.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty run file")
    header = lines[0].split(",")
    expected = ["t_s", "true_mileage_m", "true_speed_mps", "measured_speed_mps", "det_count"]
    if header[:5] != expected:
        raise ValueError(f"{path}: unexpected run CSV header {header[:5]}")
    x_center = (strip_pixels - 1) / 2.0
    frames = []
    for ln in lines[1:]:
        cells = ln.split(",")
        t, mileage, speed, measured = (float(c) for c in cells[:4])
        n_det = int(cells[4])
        ys = [float(c) for c in cells[5:5 + n_det]]
        dets = tuple(Detection(PixelPoint(x_center, y), box_side_px, 1.0) for y in ys)
        frames.append(SimFrame(t, mileage, speed, measured, dets, (False,) * n_det))
    return tuple(frames)


def write_pgm(grid: np.ndarray, path) -> None:
    """Write an intensity grid in [0, 1] as an 8-bit binary PGM."""
    data = np.clip(np.asarray(grid) * 255.0 + 0.5, 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())
