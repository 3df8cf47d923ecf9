"""Sleeper detection: the detector interface, two implementations, scoring.

A detector turns one frame's input into a nearest-first list of fixed-size
square detections along the strip's track axis.  Two kinds exist:

* ``OracleDetector`` passes a frame's simulated observations through; it
  stands in for any external detector whose output is already available.
* ``PeakDetector`` finds bright bands in a raster strip from its row-mean
  intensity profile; it is a dependency-free classical baseline.

Both are stateless and safe to call concurrently on different frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputKindMismatch
from .geometry import PixelPoint


@dataclass(frozen=True)
class Detection:
    """A detected sleeper: square box center in strip pixels plus confidence."""

    center_px: PixelPoint
    box_side_px: float
    confidence: float

    def __post_init__(self):
        if self.box_side_px <= 0 or not math.isfinite(self.box_side_px):
            raise ValueError(f"box side must be positive, got {self.box_side_px}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")


@dataclass(frozen=True)
class DetectionScore:
    """Aggregate match quality between predictions and ground truth."""

    precision: float
    recall: float
    f1: float
    true_positives: int
    false_positives: int
    false_negatives: int
    mean_latency_s: float = 0.0


class OracleDetector:
    """Pass-through detector over precomputed per-frame observations."""

    input_kind = "oracle"

    def detect(self, observations: Sequence[Detection]) -> tuple[Detection, ...]:
        if isinstance(observations, np.ndarray) or not all(
                isinstance(d, Detection) for d in observations):
            raise InputKindMismatch("oracle detector expects a sequence of detections")
        return tuple(sorted(observations, key=lambda d: d.center_px.y))


@dataclass(frozen=True)
class PeakDetector:
    """Band finder on raster strips via the row-mean intensity profile."""

    threshold: float = 0.5
    min_gap_px: int = 20
    box_side_px: float = 30.0

    input_kind = "raster"

    def detect(self, strip) -> tuple[Detection, ...]:
        if not (isinstance(strip, np.ndarray) and strip.ndim == 2):
            raise InputKindMismatch("peak detector expects a 2D raster strip")
        return peak_detect(strip, self.threshold, self.min_gap_px, self.box_side_px)


def detect_frame(detector, frame) -> tuple[Detection, ...]:
    """Feed a simulation frame to a detector, picking the right input kind."""
    if detector.input_kind == "oracle":
        return detector.detect(frame.oracle_detections)
    if detector.input_kind == "raster":
        if frame.aerial_raster is None:
            raise InputKindMismatch("frame carries no raster for a raster detector")
        return detector.detect(frame.aerial_raster)
    raise InputKindMismatch(f"unknown detector input kind {detector.input_kind!r}")


def peak_detect(
    strip,
    threshold: float,
    min_gap_px: int,
    box_side_px: float = 30.0,
) -> tuple[Detection, ...]:
    """Detect bright bands in a strip.

    Rows whose column-mean intensity exceeds ``threshold`` are grouped into
    runs; a gap of at least ``min_gap_px`` rows starts a new run.  Each run
    becomes one detection at its intensity-weighted centroid row, with
    confidence ``(peak - threshold) / (1 - threshold)`` clamped to [0, 1].
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0,1), got {threshold}")
    strip = np.asarray(strip, dtype=float)
    profile = strip.mean(axis=1)
    rows = np.nonzero(profile > threshold)[0]
    if rows.size == 0:
        return ()
    breaks = np.nonzero(np.diff(rows) >= min_gap_px)[0]
    x_center = (strip.shape[1] - 1) / 2.0
    detections = []
    for run in np.split(rows, breaks + 1):
        weights = profile[run]
        centroid = float(np.dot(weights, run) / weights.sum())
        conf = (float(weights.max()) - threshold) / (1.0 - threshold)
        detections.append(Detection(
            PixelPoint(x_center, centroid), box_side_px, min(max(conf, 0.0), 1.0)))
    return tuple(detections)


def _match_frame(pred_ys: Sequence[float], truth_ys: Sequence[float],
                 tol: float) -> int:
    # Greedy one-to-one matching by ascending center distance; ties broken
    # by truth then prediction index so results are order-independent.
    candidates = sorted(
        (abs(p - t), ti, pi)
        for ti, t in enumerate(truth_ys)
        for pi, p in enumerate(pred_ys)
        if abs(p - t) <= tol
    )
    used_t: set[int] = set()
    used_p: set[int] = set()
    tp = 0
    for _, ti, pi in candidates:
        if ti in used_t or pi in used_p:
            continue
        used_t.add(ti)
        used_p.add(pi)
        tp += 1
    return tp


def score_detections(
    predicted: Sequence[Sequence[Detection]],
    truth: Sequence[Sequence[float]],
    match_tol_px: float,
    mean_latency_s: float = 0.0,
) -> DetectionScore:
    """Precision/recall/F1 over per-frame predictions vs. truth centers.

    Matching is one-to-one within ``match_tol_px`` along the track axis;
    unmatched predictions count as false positives and unmatched truths as
    false negatives.  Counts are pooled over all frames before computing
    the scores.
    """
    if match_tol_px <= 0:
        raise ValueError(f"match tolerance must be positive, got {match_tol_px}")
    if len(predicted) != len(truth):
        raise ValueError(
            f"got {len(predicted)} prediction frames but {len(truth)} truth frames")
    tp = fp = fn = 0
    for preds, truths in zip(predicted, truth):
        pred_ys = [d.center_px.y for d in preds]
        matched = _match_frame(pred_ys, list(truths), match_tol_px)
        tp += matched
        fp += len(pred_ys) - matched
        fn += len(truths) - matched
    if tp + fp + fn == 0:
        return DetectionScore(1.0, 1.0, 1.0, 0, 0, 0, mean_latency_s)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return DetectionScore(precision, recall, f1, tp, fp, fn, mean_latency_s)


def write_detections_csv(per_frame: Sequence[Sequence[Detection]], path) -> None:
    """Dump per-frame detections as ``frame,det_idx,y_px,confidence`` rows."""
    lines = ["frame,det_idx,y_px,confidence"]
    for frame_idx, dets in enumerate(per_frame):
        for det_idx, det in enumerate(dets):
            lines.append(f"{frame_idx},{det_idx},{det.center_px.y!r},{det.confidence!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_detections_csv(path, box_side_px: float = 30.0) -> list[list[Detection]]:
    """Read a detection dump back into per-frame lists (frames are dense)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "frame,det_idx,y_px,confidence":
        raise ValueError(f"{path}: unexpected detection CSV header")
    rows = []
    for ln in lines[1:]:
        frame_s, _, y_s, conf_s = ln.split(",")
        rows.append((int(frame_s), float(y_s), float(conf_s)))
    n_frames = max((f for f, _, _ in rows), default=-1) + 1
    out: list[list[Detection]] = [[] for _ in range(n_frames)]
    for frame_idx, y, conf in rows:
        out[frame_idx].append(Detection(PixelPoint(0.0, y), box_side_px, conf))
    return out
