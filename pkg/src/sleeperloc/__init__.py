"""Sleeper-anchored rail vehicle localization.

A numpy library that localizes a rail vehicle from two on-board sources: a
speed sensor, whose integrated distance drifts, and a forward camera whose
top-down (aerial) remap shows the regularly spaced track sleepers.  The
sleeper nearest the train fixes the position modulo the sleeper spacing at
every frame, which caps the localization error instead of letting it grow
with distance.  A deterministic scenario simulator and error reporting
utilities make the direct-integration vs. camera-corrected comparison
reproducible end to end.
"""

from .detect import (
    Detection,
    DetectionScore,
    OracleDetector,
    PeakDetector,
    detect_frame,
    peak_detect,
    read_detections_csv,
    score_detections,
    write_detections_csv,
)
from .errors import (
    ConfigInvalid,
    DegenerateConfiguration,
    EmptySeries,
    InfeasibleProfile,
    InputKindMismatch,
    LengthMismatch,
    NegativeDistance,
    NonPositiveInterval,
    OutOfRoute,
    PointAtInfinity,
    SleeperLocError,
    UnknownFormat,
    WrongArity,
    ZeroBaseline,
)
from .estimate import (
    CorrectionContext,
    CorrectionFactor,
    PositionEstimate,
    correction_factor,
    read_trace_csv,
    run_estimator,
    sensor_distance,
    sleeper_count,
    step_direct,
    step_visual,
    wrapped_phase_difference,
    write_trace_csv,
)
from .geometry import (
    Homography,
    PixelPoint,
    PixelScale,
    PointPair,
    apply_homography,
    calibrate_pixel_scale,
    estimate_homography,
    invert_homography,
    load_calibration,
    pixel_to_world,
    warp_raster,
)
from .report import (
    ErrorReport,
    IntervalErrors,
    compute_errors,
    emit_report,
    format_comparison,
    report_from_json,
)
from .scenario import ScenarioConfig, load_scenario, scenario_from_dict, scenario_to_dict
from .simulate import (
    SensorModel,
    SimFrame,
    SimRun,
    SpeedProfile,
    corrupt_speed,
    generate_kinematics,
    generate_run,
    read_run_frames,
    render_aerial_strip,
    write_pgm,
    write_run_csv,
)
from .track import (
    CameraGeometry,
    Route,
    SleeperLattice,
    interval_label,
    interval_of,
    nearest_sleeper_phase,
    visible_sleepers,
)

__version__ = "0.1.0"
