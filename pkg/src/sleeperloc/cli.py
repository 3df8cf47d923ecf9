"""Command-line front end over the library.

Subcommands: ``simulate``, ``estimate``, ``evaluate``, ``detect-eval``,
``calibrate``, ``compare``.  Exit codes: 0 on success, 1 on usage errors,
2 on data errors (missing/malformed files, invalid configs).
"""

from __future__ import annotations

import argparse
import os
import sys

from .detect import read_detections_csv, score_detections
from .errors import SleeperLocError
from .estimate import read_trace_csv, run_estimator, write_trace_csv
from .geometry import calibrate_pixel_scale, estimate_homography, load_calibration
from .report import compute_errors, emit_report, format_comparison
from .scenario import load_scenario
from .simulate import SimRun, generate_run, read_run_frames, write_pgm, write_run_csv


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route that to status 1.
    def error(self, message):
        raise _UsageError(message)


def _clamped(estimates, route):
    top = route.total_length
    return [min(max(e.mileage, 0.0), top) for e in estimates]


def _cmd_simulate(args) -> int:
    config = load_scenario(args.config)
    run = generate_run(config)
    os.makedirs(args.out, exist_ok=True)
    run_path = os.path.join(args.out, "run.csv")
    write_run_csv(run, run_path)
    n_rasters = 0
    for i, frame in enumerate(run.frames):
        if frame.aerial_raster is not None:
            write_pgm(frame.aerial_raster, os.path.join(args.out, f"frame_{i:06d}.pgm"))
            n_rasters += 1
    print(f"wrote {run_path}: {len(run.frames)} frames over "
          f"{run.route.total_length:.0f} m" +
          (f", {n_rasters} raster frames" if n_rasters else ""))
    return 0


def _cmd_estimate(args) -> int:
    config = load_scenario(args.config)
    frames = read_run_frames(args.run, config.box_side_px, config.camera.strip_pixels)
    run = SimRun(frames, config.route, config.lattice, config.camera, config.dt)
    estimates = run_estimator(run, args.method, config.correction_context())
    truths = [f.true_mileage for f in frames]
    write_trace_csv(estimates, truths, config.route, args.out)
    print(f"wrote {args.out}: {len(estimates)} {args.method} estimates")
    return 0


def _cmd_evaluate(args) -> int:
    config = load_scenario(args.config)
    _, estimates, truths = read_trace_csv(args.estimates)
    report = compute_errors(estimates, truths, config.route)
    print(emit_report(report, args.format))
    return 0


def _cmd_detect_eval(args) -> int:
    predicted = read_detections_csv(args.pred)
    truth_frames = read_detections_csv(args.truth)
    n = max(len(predicted), len(truth_frames))
    predicted += [[] for _ in range(n - len(predicted))]
    truth_frames += [[] for _ in range(n - len(truth_frames))]
    truth_centers = [[d.center_px.y for d in frame] for frame in truth_frames]
    score = score_detections(predicted, truth_centers, args.tol)
    print(f"precision {score.precision:.4f}")
    print(f"recall    {score.recall:.4f}")
    print(f"f1        {score.f1:.4f}")
    print(f"tp/fp/fn  {score.true_positives}/{score.false_positives}/"
          f"{score.false_negatives}")
    return 0


def _cmd_calibrate(args) -> int:
    pairs, axis, world = load_calibration(args.points)
    h = estimate_homography(pairs)
    scale = calibrate_pixel_scale(axis, world)
    print("view transform matrix:")
    for row in h.m:
        print("  " + "  ".join(f"{v: .10g}" for v in row))
    print(f"pixels per meter: {scale.pixels_per_meter:.10g}")
    return 0


def _cmd_compare(args) -> int:
    config = load_scenario(args.config)
    run = generate_run(config)
    truths = [f.true_mileage for f in run.frames]
    est_direct = run_estimator(run, "direct")
    est_visual = run_estimator(run, "visual", config.correction_context())
    direct_m = _clamped(est_direct, config.route)
    visual_m = _clamped(est_visual, config.route)

    os.makedirs(args.out, exist_ok=True)
    curve_path = os.path.join(args.out, "error_curve.csv")
    lines = ["t_s,err_direct_m,err_visual_m"]
    for frame, dm, vm in zip(run.frames, direct_m, visual_m):
        lines.append(f"{frame.t!r},{dm - frame.true_mileage!r},"
                     f"{vm - frame.true_mileage!r}")
    with open(curve_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

    report_direct = compute_errors(direct_m, truths, config.route)
    report_visual = compute_errors(visual_m, truths, config.route)
    print(format_comparison(report_direct, report_visual))
    print(f"wrote {curve_path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="sleeperloc",
                     description="Sleeper-anchored rail localization toolkit")
    sub = parser.add_subparsers(dest="cmd", metavar="command")

    p = sub.add_parser("simulate", help="generate a seeded run and write its CSV")
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="run an estimator over a run CSV")
    p.add_argument("--run", required=True, help="run CSV from 'simulate'")
    p.add_argument("--method", required=True, choices=("visual", "direct"))
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--out", required=True, help="trace CSV to write")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("evaluate", help="error report from an estimate trace")
    p.add_argument("--estimates", required=True, help="trace CSV from 'estimate'")
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--format", default="table", choices=("table", "csv", "json"))
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("detect-eval", help="score detections against ground truth")
    p.add_argument("--pred", required=True, help="predicted detections CSV")
    p.add_argument("--truth", required=True, help="ground-truth detections CSV")
    p.add_argument("--tol", type=float, default=15.0,
                   help="match tolerance in pixels (default 15)")
    p.set_defaults(func=_cmd_detect_eval)

    p = sub.add_parser("calibrate", help="estimate the view transform and pixel scale")
    p.add_argument("--points", required=True, help="calibration points JSON")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("compare", help="simulate, run both estimators, report side by side")
    p.add_argument("--config", required=True, help="scenario config JSON")
    p.add_argument("--out", default=".", help="directory for error_curve.csv")
    p.set_defaults(func=_cmd_compare)

    return parser


def cli_main(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help paths
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (SleeperLocError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
