"""Streaming position estimation over simulation frames.

Two estimators share one interface:

* ``direct``: trapezoidal integration of the measured speed.  Any
  multiplicative sensor bias makes its error grow linearly with distance.
* ``visual``: the measured speed is only trusted to count whole sleeper
  spacings; the sub-spacing part of each step is re-read from the camera.
  Because the camera re-anchors the position against the sleeper lattice at
  every frame, the error stays bounded instead of accumulating.

The visual step decomposes the frame-to-frame displacement as

    step = count * spacing + remainder

where ``remainder`` in [0, spacing) comes from the change of the visually
measured sleeper phase, and ``count`` is chosen from the speed-sensor
distance.  The phase-to-next-sleeper shrinks as the train advances, so the
remainder is the wrapped difference previous-minus-current.  The count
candidate ``floor(sensor_distance / spacing)`` is snapped by at most one
spacing so that the composite step never disagrees with the sensor distance
by more than half a spacing; a single step whose sensor distance is off by
more than that is wrong by exactly one spacing (a quantized failure), and
the next clean frame re-locks the phase.

Frames without a usable detection are flagged and coasted: the step falls
back to the plain sensor distance and the carried phase is advanced by it,
so the assumed fallback phase never enters the difference chain.  Feeding
an assumed phase into differences would be fragile: whenever the true
phase sits near the wrap boundary (e.g. while dwelling at a station that
falls on the sleeper lattice), the entering and leaving transients stop
cancelling and each dropout would randomly add or subtract a whole
spacing.  Coasting keeps a dropout's cost at the sensor error it spans.

An estimator instance is a sequential state machine: drive it from one
thread per run.  Distinct runs can execute concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .detect import OracleDetector, detect_frame
from .errors import NonPositiveInterval
from .geometry import PixelScale, pixel_to_world
from .simulate import SimRun


@dataclass(frozen=True)
class CorrectionContext:
    """Geometry constants the visual correction needs.

    ``fallback_fraction`` (in (0, 1)) places the assumed phase when no
    usable detection exists; 0.5 minimizes the worst-case phase error under
    a uniform prior.
    """

    spacing: float
    blind_distance: float
    scale: PixelScale
    fallback_fraction: float = 0.5

    def __post_init__(self):
        if self.spacing <= 0 or not math.isfinite(self.spacing):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if self.blind_distance < 0 or not math.isfinite(self.blind_distance):
            raise ValueError(f"blind distance must be >= 0, got {self.blind_distance}")
        if not 0.0 < self.fallback_fraction < 1.0:
            raise ValueError(
                f"fallback fraction must be in (0,1), got {self.fallback_fraction}")


@dataclass(frozen=True)
class CorrectionFactor:
    """Visually measured train-front phase in [0, spacing), plus its origin."""

    phase: float
    fallback_used: bool


@dataclass(frozen=True)
class PositionEstimate:
    """Per-frame estimator output with step diagnostics.

    ``mileage`` is the raw running estimate (clamped below at 0, never at
    the route end); ``spacing_count``/``remainder``/``phase`` describe how
    the last step was assembled.  Direct-integration estimates keep the
    correction fields at their zero values.
    """

    t: float
    mileage: float
    step_distance: float = 0.0
    spacing_count: int = 0
    remainder: float = 0.0
    phase: float = 0.0
    fallback_used: bool = False


def correction_factor(ctx: CorrectionContext, nearest_detection_px: float | None) -> CorrectionFactor:
    """Train-front sleeper phase from the nearest detection, if usable.

    The detection's strip offset plus the blind distance gives the distance
    from the train front to a known sleeper; reducing it modulo the spacing
    yields the phase.  When there is no detection, or the offset already
    spans a full spacing (which means the nearest sleeper was missed), the
    fixed fallback phase is reported instead and flagged.
    """
    if nearest_detection_px is None:
        return CorrectionFactor(ctx.fallback_fraction * ctx.spacing, True)
    offset_m = pixel_to_world(ctx.scale, nearest_detection_px)
    if offset_m >= ctx.spacing:
        return CorrectionFactor(ctx.fallback_fraction * ctx.spacing, True)
    raw = offset_m + ctx.blind_distance
    phase = raw - math.floor(raw / ctx.spacing) * ctx.spacing
    if phase >= ctx.spacing:  # guards the float edge where raw/spacing rounds up
        phase -= ctx.spacing
    return CorrectionFactor(phase, False)


def sensor_distance(v1: float, v2: float, interval_s: float) -> float:
    """Trapezoidal distance covered between two speed readings."""
    if interval_s <= 0:
        raise NonPositiveInterval(f"time interval must be positive, got {interval_s}")
    return 0.5 * (v1 + v2) * interval_s


def sleeper_count(distance: float, spacing: float) -> int:
    """Whole sleeper spacings contained in a sensor distance."""
    return int(math.floor(distance / spacing))


def wrapped_phase_difference(phase_from: float, phase_to: float, spacing: float) -> float:
    """Difference ``phase_to - phase_from`` wrapped into [0, spacing)."""
    gamma = phase_to - phase_from
    if gamma < 0:
        gamma += spacing
    if gamma >= spacing:  # tiny negative differences can round up to spacing
        gamma -= spacing
    return gamma


def step_visual(
    state: PositionEstimate,
    ctx: CorrectionContext,
    t: float,
    v1: float,
    v2: float,
    interval_s: float,
    nearest_detection_px: float | None,
) -> PositionEstimate:
    """Advance the visual estimator by one frame.

    ``state`` must carry the phase measured at the previous frame; ``v1``
    and ``v2`` are the measured speeds at the previous and current frame.
    """
    factor = correction_factor(ctx, nearest_detection_px)
    d_sensor = sensor_distance(v1, v2, interval_s)
    count = sleeper_count(d_sensor, ctx.spacing)
    if factor.fallback_used:
        # Coast: take the sensor distance as-is and advance the carried
        # phase by it, so the next real detection re-anchors cleanly.
        remainder = d_sensor - count * ctx.spacing
        phase = (state.phase - d_sensor) % ctx.spacing
        step = d_sensor
    else:
        # The phase-to-next-sleeper shrinks as the train advances, so the
        # advance remainder is the wrapped previous-minus-current difference.
        remainder = wrapped_phase_difference(factor.phase, state.phase, ctx.spacing)
        step = count * ctx.spacing + remainder
        # Snap the count so the composite step stays within half a spacing
        # of the sensor distance; the remainder already fixes the step
        # modulo the spacing, so only the multiple is in question.
        if step - d_sensor > ctx.spacing / 2.0:
            count -= 1
        elif d_sensor - step > ctx.spacing / 2.0:
            count += 1
        step = count * ctx.spacing + remainder
        phase = factor.phase
    mileage = max(0.0, state.mileage + step)
    return PositionEstimate(t, mileage, step, count, remainder,
                            phase, factor.fallback_used)


def step_direct(
    state: PositionEstimate,
    t: float,
    v1: float,
    v2: float,
    interval_s: float,
) -> PositionEstimate:
    """Advance the direct integrator by one frame."""
    step = sensor_distance(v1, v2, interval_s)
    return PositionEstimate(t, state.mileage + step, step)


def _nearest_detection_px(detections) -> float | None:
    if not detections:
        return None
    return min(d.center_px.y for d in detections)


def run_estimator(
    run: SimRun,
    method: str,
    ctx: CorrectionContext | None = None,
    detector=None,
    initial_mileage: float | None = None,
) -> list[PositionEstimate]:
    """Stream an estimator over a run, one estimate per frame.

    The starting mileage is taken as known (trains depart from a known
    station); it defaults to the first frame's true position.  The visual
    method initializes its phase from the first frame's own detections.
    """
    if not run.frames:
        raise ValueError("run has no frames")
    frames = run.frames
    start = frames[0].true_mileage if initial_mileage is None else initial_mileage

    if method == "direct":
        state = PositionEstimate(frames[0].t, start)
        estimates = [state]
        for prev, frame in zip(frames, frames[1:]):
            state = step_direct(state, frame.t, prev.measured_speed,
                                frame.measured_speed, frame.t - prev.t)
            estimates.append(state)
        return estimates

    if method != "visual":
        raise ValueError(f"unknown estimator method {method!r}")
    if ctx is None:
        raise ValueError("the visual estimator needs a correction context")
    if detector is None:
        detector = OracleDetector()

    factor = correction_factor(ctx, _nearest_detection_px(detect_frame(detector, frames[0])))
    state = PositionEstimate(frames[0].t, start, 0.0, 0, 0.0,
                             factor.phase, factor.fallback_used)
    estimates = [state]
    for prev, frame in zip(frames, frames[1:]):
        nearest = _nearest_detection_px(detect_frame(detector, frame))
        state = step_visual(state, ctx, frame.t, prev.measured_speed,
                            frame.measured_speed, frame.t - prev.t, nearest)
        estimates.append(state)
    return estimates


def write_trace_csv(estimates, truths, route, path) -> None:
    """Write the per-frame estimate trace.

    Columns: ``t_s,est_mileage_m,true_mileage_m,err_m,L,gamma_m,theta_m,
    fallback``.  The reported mileage is clamped to the route extent and
    the error is signed (estimate minus truth).
    """
    if len(estimates) != len(truths):
        raise ValueError(f"{len(estimates)} estimates vs {len(truths)} truths")
    lines = ["t_s,est_mileage_m,true_mileage_m,err_m,L,gamma_m,theta_m,fallback"]
    top = route.total_length
    for est, true_m in zip(estimates, truths):
        reported = min(max(est.mileage, 0.0), top)
        lines.append(",".join([
            repr(float(est.t)),
            repr(float(reported)),
            repr(float(true_m)),
            repr(float(reported - true_m)),
            str(est.spacing_count),
            repr(float(est.remainder)),
            repr(float(est.phase)),
            "1" if est.fallback_used else "0",
        ]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trace_csv(path) -> tuple[list[float], list[float], list[float]]:
    """Read back ``(t, estimated, true)`` mileage series from a trace CSV."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("t_s,est_mileage_m,true_mileage_m"):
        raise ValueError(f"{path}: unexpected trace CSV header")
    ts, ests, trues = [], [], []
    for ln in lines[1:]:
        cells = ln.split(",")
        ts.append(float(cells[0]))
        ests.append(float(cells[1]))
        trues.append(float(cells[2]))
    return ts, ests, trues
