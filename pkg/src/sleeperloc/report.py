"""Localization error metrics and report formatting.

Errors are summarized per station interval and over the whole route by two
numbers: the maximum absolute mileage error (ME, meters) and the mean of
the absolute error divided by the true mileage (MPE, a fraction).  Points
with true mileage below one meter are excluded from the MPE average, since
the relative error is undefined at the origin; the denominator is always
the absolute route mileage, so early intervals naturally show larger MPE
for the same absolute error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySeries, LengthMismatch, UnknownFormat
from .track import Route, interval_label

# True mileages below this are excluded from the MPE average.
_MPE_MIN_TRUTH_M = 1.0

WHOLE_ROUTE_LABEL = "Whole Route"


@dataclass(frozen=True)
class IntervalErrors:
    label: str
    max_error_m: float
    mean_percentage_error: float
    n_points: int


@dataclass(frozen=True)
class ErrorReport:
    per_interval: tuple[IntervalErrors, ...]
    whole_route: IntervalErrors
    n_points: int


def _summarize(label: str, errors: np.ndarray, truths: np.ndarray) -> IntervalErrors:
    if errors.size == 0:
        return IntervalErrors(label, 0.0, 0.0, 0)
    valid = truths >= _MPE_MIN_TRUTH_M
    mpe = float(np.mean(errors[valid] / truths[valid])) if np.any(valid) else 0.0
    return IntervalErrors(label, float(errors.max()), mpe, int(errors.size))


def compute_errors(
    estimates: Sequence[float], truths: Sequence[float], route: Route,
) -> ErrorReport:
    """Per-interval and whole-route ME/MPE for aligned mileage series."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.size != tru.size:
        raise LengthMismatch(f"{est.size} estimates vs {tru.size} truths")
    if est.size == 0:
        raise EmptySeries("cannot compute errors over an empty series")
    errors = np.abs(est - tru)
    stations = np.asarray(route.station_mileages)
    idx = np.clip(np.searchsorted(stations, tru, side="right") - 1,
                  0, route.interval_count - 1)
    per_interval = tuple(
        _summarize(interval_label(route, i), errors[idx == i], tru[idx == i])
        for i in range(route.interval_count)
    )
    whole = _summarize(WHOLE_ROUTE_LABEL, errors, tru)
    return ErrorReport(per_interval, whole, int(est.size))


def emit_report(report: ErrorReport, fmt: str = "table") -> str:
    """Render a report as ``table`` (rounded), ``csv``, or ``json`` (full precision)."""
    rows = list(report.per_interval) + [report.whole_route]
    if fmt == "table":
        width = max(len(r.label) for r in rows)
        lines = [f"{'Interval':<{width}}  {'ME (m)':>8}  {'MPE (%)':>8}"]
        for r in rows:
            lines.append(f"{r.label:<{width}}  {r.max_error_m:>8.2f}  "
                         f"{r.mean_percentage_error * 100:>7.2f}%")
        return "\n".join(lines)
    if fmt == "csv":
        lines = ["interval,me_m,mpe,n_points"]
        lines += [f"{r.label},{r.max_error_m!r},{r.mean_percentage_error!r},{r.n_points}"
                  for r in rows]
        return "\n".join(lines)
    if fmt == "json":
        def _entry(r: IntervalErrors) -> dict:
            return {"label": r.label, "me_m": r.max_error_m,
                    "mpe": r.mean_percentage_error, "n_points": r.n_points}
        return json.dumps({
            "per_interval": [_entry(r) for r in report.per_interval],
            "whole_route": _entry(report.whole_route),
            "n_points": report.n_points,
        }, sort_keys=True)
    raise UnknownFormat(f"unknown report format {fmt!r}")


def report_from_json(text: str) -> ErrorReport:
    """Parse a report previously emitted with ``emit_report(..., 'json')``."""
    doc = json.loads(text)

    def _entry(d: dict) -> IntervalErrors:
        return IntervalErrors(d["label"], d["me_m"], d["mpe"], d["n_points"])

    return ErrorReport(
        tuple(_entry(d) for d in doc["per_interval"]),
        _entry(doc["whole_route"]),
        doc["n_points"],
    )


def format_comparison(direct: ErrorReport, visual: ErrorReport) -> str:
    """Side-by-side table of two reports over the same route."""
    rows_d = list(direct.per_interval) + [direct.whole_route]
    rows_v = list(visual.per_interval) + [visual.whole_route]
    if [r.label for r in rows_d] != [r.label for r in rows_v]:
        raise LengthMismatch("reports cover different intervals")
    width = max(len(r.label) for r in rows_d)
    header = (f"{'Interval':<{width}}  {'Direct ME':>10}  {'Direct MPE':>10}  "
              f"{'Visual ME':>10}  {'Visual MPE':>10}")
    lines = [header]
    for rd, rv in zip(rows_d, rows_v):
        lines.append(
            f"{rd.label:<{width}}  {rd.max_error_m:>10.2f}  "
            f"{rd.mean_percentage_error * 100:>9.2f}%  "
            f"{rv.max_error_m:>10.2f}  {rv.mean_percentage_error * 100:>9.2f}%")
    return "\n".join(lines)
