"""Scenario configuration: one JSON document describing a whole experiment.

Schema (units in key suffixes)::

    {
      "route": {
        "stations_m": [0.0, 1100.0, ...],        # first must be 0
        "total_length_m": 6900.0,                # optional, default last station
        "tunnel_segments_m": [[a, b], ...],      # optional
        "tau_m": 0.6,                            # sleeper spacing
        "phase_m": 0.0,                          # sleeper lattice offset
        "d_B_m": 2.0,                            # camera blind distance
        "visible_m": 2.56,                       # aerial strip length
        "strip_px": 256,                         # strip size in pixels
        "px_per_m": 100.0                        # optional, default strip_px/visible_m
      },
      "profile": {"cruise_mps": ..., "accel_mps2": ..., "decel_mps2": ...,
                  "dwell_s": ...},               # scalars or per-interval lists
      "sensor": {"speed_bias": ..., "speed_noise_sigma": ...,
                 "detect_miss_prob": ..., "detect_pixel_sigma": ...,
                 "false_positive_rate": ..., "seed": ...},
      "dt_s": 0.0667,
      "fallback_fraction": 0.5,                  # optional
      "box_side_px": 30,                         # optional
      "render_raster": false,                    # optional
      "raster_noise_sigma": 0.05                 # optional
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import ConfigInvalid
from .estimate import CorrectionContext
from .geometry import PixelScale
from .simulate import SensorModel, SpeedProfile
from .track import CameraGeometry, Route, SleeperLattice


@dataclass(frozen=True)
class ScenarioConfig:
    route: Route
    lattice: SleeperLattice
    camera: CameraGeometry
    profile: SpeedProfile
    sensor: SensorModel
    dt: float
    fallback_fraction: float = 0.5
    box_side_px: float = 30.0
    render_raster: bool = False
    raster_noise_sigma: float = 0.0

    def correction_context(self) -> CorrectionContext:
        return CorrectionContext(
            spacing=self.lattice.spacing,
            blind_distance=self.camera.blind_distance,
            scale=self.camera.scale,
            fallback_fraction=self.fallback_fraction,
        )

    def with_seed(self, seed: int) -> ScenarioConfig:
        return replace(self, sensor=replace(self.sensor, seed=seed))


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigInvalid(f"missing '{key}' in {where}")
    return section[key]


def _number(section: dict, key: str, where: str) -> float:
    val = _require(section, key, where)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigInvalid(f"'{key}' in {where} must be a number, got {val!r}")
    return float(val)


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    """Validate a parsed JSON document and build the scenario objects."""
    if not isinstance(doc, dict):
        raise ConfigInvalid("scenario config must be a JSON object")
    for key in ("route", "profile", "sensor"):
        if not isinstance(doc.get(key), dict):
            raise ConfigInvalid(f"missing or malformed '{key}' section")
    rsec, psec, ssec = doc["route"], doc["profile"], doc["sensor"]

    try:
        stations = [float(s) for s in _require(rsec, "stations_m", "route")]
        total = float(rsec.get("total_length_m", stations[-1] if stations else 0.0))
        tunnels = [(float(a), float(b)) for a, b in rsec.get("tunnel_segments_m", [])]
        route = Route(tuple(stations), total, tuple(tunnels))
        lattice = SleeperLattice(_number(rsec, "tau_m", "route"),
                                 _number(rsec, "phase_m", "route"))
        strip_px = int(_number(rsec, "strip_px", "route"))
        visible = _number(rsec, "visible_m", "route")
        default_r = strip_px / visible if visible > 0 else 0.0
        r = float(rsec.get("px_per_m", default_r))
        camera = CameraGeometry(_number(rsec, "d_B_m", "route"), visible,
                                PixelScale(r), strip_px)

        def _speed_field(key: str):
            val = _require(psec, key, "profile")
            if isinstance(val, list):
                return tuple(float(v) for v in val)
            return float(val)

        profile = SpeedProfile(
            cruise_speed=_speed_field("cruise_mps"),
            accel=_speed_field("accel_mps2"),
            decel=_speed_field("decel_mps2"),
            dwell_s=_speed_field("dwell_s") if "dwell_s" in psec else 0.0,
        )
        sensor = SensorModel(
            speed_bias=_number(ssec, "speed_bias", "sensor"),
            speed_noise_sigma=_number(ssec, "speed_noise_sigma", "sensor"),
            detect_miss_prob=_number(ssec, "detect_miss_prob", "sensor"),
            detect_pixel_sigma=_number(ssec, "detect_pixel_sigma", "sensor"),
            false_positive_rate=_number(ssec, "false_positive_rate", "sensor"),
            seed=int(_number(ssec, "seed", "sensor")),
        )
        dt = _number(doc, "dt_s", "scenario")
        if dt <= 0:
            raise ConfigInvalid(f"'dt_s' must be positive, got {dt}")
        return ScenarioConfig(
            route=route,
            lattice=lattice,
            camera=camera,
            profile=profile,
            sensor=sensor,
            dt=dt,
            fallback_fraction=float(doc.get("fallback_fraction", 0.5)),
            box_side_px=float(doc.get("box_side_px", 30.0)),
            render_raster=bool(doc.get("render_raster", False)),
            raster_noise_sigma=float(doc.get("raster_noise_sigma", 0.0)),
        )
    except ConfigInvalid:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"invalid scenario config: {exc}") from exc


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a scenario config file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: not valid JSON ({exc})") from exc
    return scenario_from_dict(doc)


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Inverse of ``scenario_from_dict`` (dwell and speeds stay as given)."""

    def _plain(val):
        return list(val) if isinstance(val, tuple) else val

    return {
        "route": {
            "stations_m": list(config.route.station_mileages),
            "total_length_m": config.route.total_length,
            "tunnel_segments_m": [list(seg) for seg in config.route.tunnel_segments],
            "tau_m": config.lattice.spacing,
            "phase_m": config.lattice.phase,
            "d_B_m": config.camera.blind_distance,
            "visible_m": config.camera.visible_length,
            "strip_px": config.camera.strip_pixels,
            "px_per_m": config.camera.scale.pixels_per_meter,
        },
        "profile": {
            "cruise_mps": _plain(config.profile.cruise_speed),
            "accel_mps2": _plain(config.profile.accel),
            "decel_mps2": _plain(config.profile.decel),
            "dwell_s": _plain(config.profile.dwell_s),
        },
        "sensor": {
            "speed_bias": config.sensor.speed_bias,
            "speed_noise_sigma": config.sensor.speed_noise_sigma,
            "detect_miss_prob": config.sensor.detect_miss_prob,
            "detect_pixel_sigma": config.sensor.detect_pixel_sigma,
            "false_positive_rate": config.sensor.false_positive_rate,
            "seed": config.sensor.seed,
        },
        "dt_s": config.dt,
        "fallback_fraction": config.fallback_fraction,
        "box_side_px": config.box_side_px,
        "render_raster": config.render_raster,
        "raster_noise_sigma": config.raster_noise_sigma,
    }
