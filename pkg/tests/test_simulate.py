import numpy as np
import pytest

from sleeperloc.errors import InfeasibleProfile
from sleeperloc.geometry import PixelScale
from sleeperloc.scenario import scenario_from_dict
from sleeperloc.simulate import (
    SensorModel,
    SpeedProfile,
    corrupt_speed,
    generate_kinematics,
    generate_run,
    read_run_frames,
    render_aerial_strip,
    write_pgm,
    write_run_csv,
)
from sleeperloc.track import CameraGeometry, Route, SleeperLattice, visible_sleepers

DT = 1.0 / 15.0


class TestKinematics:
    def test_symmetric_trapezoid_without_cruise(self):
        route = Route((0.0, 100.0), 100.0)
        profile = SpeedProfile(cruise_speed=10.0, accel=1.0, decel=1.0, dwell_s=0.0)
        kin = generate_kinematics(route, profile, dt=0.5)
        times = [t for t, _, _ in kin]
        speeds = [v for _, _, v in kin]
        assert times[-1] == pytest.approx(20.0)  # 10 s up, 10 s down
        assert max(speeds) == pytest.approx(10.0)
        # midpoint of the ramp-up: x = 0.5*a*t^2
        t, m, v = kin[10]
        assert (t, m, v) == (pytest.approx(5.0), pytest.approx(12.5), pytest.approx(5.0))
        assert kin[-1][1] == pytest.approx(100.0)

    def test_dwell_produces_stationary_frames(self):
        route = Route((0.0, 100.0), 100.0)
        profile = SpeedProfile(10.0, 1.0, 1.0, dwell_s=30.0)
        kin = generate_kinematics(route, profile, dt=DT)
        mileages = np.array([m for _, m, _ in kin])
        n_initial_dwell = int(np.sum(mileages == 0.0))
        assert n_initial_dwell >= int(30.0 / DT)

    def test_infeasible_trapezoid_rejected(self):
        route = Route((0.0, 100.0), 100.0)
        profile = SpeedProfile(cruise_speed=50.0, accel=1.0, decel=1.0)
        with pytest.raises(InfeasibleProfile):
            generate_kinematics(route, profile, dt=DT)

    def test_stops_exactly_on_stations(self):
        route = Route((0.0, 500.0, 1300.0), 1300.0)
        profile = SpeedProfile(12.0, 0.8, 1.0, dwell_s=10.0)
        kin = generate_kinematics(route, profile, dt=DT)
        mileages = np.array([m for _, m, _ in kin])
        for station in route.station_mileages[1:]:
            assert np.any(np.abs(mileages - station) < 1e-9)
        assert mileages[-1] == route.station_mileages[-1]

    def test_mileage_monotone_and_trapezoid_consistent(self):
        route = Route((0.0, 400.0, 900.0), 900.0)
        profile = SpeedProfile((10.0, 12.0), 0.7, 0.9, dwell_s=(5.0, 8.0, 0.0))
        kin = generate_kinematics(route, profile, dt=DT)
        a_max = 0.9
        for (_, m1, v1), (_, m2, v2) in zip(kin, kin[1:]):
            assert m2 >= m1
            assert abs((m2 - m1) - 0.5 * (v1 + v2) * DT) <= a_max * DT * DT + 1e-12

    def test_frame_times_are_exact_multiples(self):
        route = Route((0.0, 100.0), 100.0)
        kin = generate_kinematics(route, SpeedProfile(10.0, 1.0, 1.0), dt=DT)
        for k, (t, _, _) in enumerate(kin):
            assert t == k * DT


class TestCorruptSpeed:
    def test_noiseless_identity(self):
        rng = np.random.default_rng(0)
        model = SensorModel(speed_bias=0.0, speed_noise_sigma=0.0)
        assert corrupt_speed(model, 12.0, rng) == 12.0

    def test_bias_is_multiplicative(self):
        rng = np.random.default_rng(0)
        model = SensorModel(speed_bias=0.005)
        assert corrupt_speed(model, 10.0, rng) == pytest.approx(10.05)

    def test_clamped_at_zero(self):
        rng = np.random.default_rng(0)
        model = SensorModel(speed_bias=-2.0)
        assert corrupt_speed(model, 1.0, rng) == 0.0


class TestRenderAerialStrip:
    lattice = SleeperLattice(0.6)
    cam = CameraGeometry(2.0, 2.56, PixelScale(100.0), 256)

    def test_empty_view_is_background(self):
        cam = CameraGeometry(0.05, 0.4, PixelScale(100.0), 40)
        strip = render_aerial_strip(self.lattice, cam, 0.05)
        assert strip.shape == (40, 40)
        assert np.allclose(strip, 0.2)

    def test_band_centered_at_offset(self):
        # front at 0: first sleeper at 2.4 m -> offset 0.4 m -> row 40
        strip = render_aerial_strip(self.lattice, self.cam, 0.0)
        profile = strip.mean(axis=1)
        bright = np.nonzero(profile > 0.5)[0]
        band = bright[bright < 70]
        centroid = np.dot(profile[band], band) / profile[band].sum()
        assert abs(centroid - 40.0) <= 0.5
        assert profile[40] == pytest.approx(0.9)

    def test_band_spacing_matches_lattice(self):
        strip = render_aerial_strip(self.lattice, self.cam, 0.0)
        profile = strip.mean(axis=1)
        bright = np.nonzero(profile > 0.5)[0]
        groups = np.split(bright, np.nonzero(np.diff(bright) > 1)[0] + 1)
        centers = [g.mean() for g in groups]
        assert len(centers) == 4
        assert np.allclose(np.diff(centers), 60.0, atol=0.5)

    def test_noise_is_clamped(self):
        rng = np.random.default_rng(1)
        strip = render_aerial_strip(self.lattice, self.cam, 0.0, 0.5, rng)
        assert strip.min() >= 0.0 and strip.max() <= 1.0


class TestGenerateRun:
    def test_zero_noise_detections_match_geometry(self, small_doc):
        doc = dict(small_doc)
        doc["sensor"] = dict(doc["sensor"], speed_bias=0.0, speed_noise_sigma=0.0,
                             detect_miss_prob=0.0, detect_pixel_sigma=0.0,
                             false_positive_rate=0.0)
        config = scenario_from_dict(doc)
        run = generate_run(config)
        r = config.camera.scale.pixels_per_meter
        for frame in run.frames[:300]:
            expected = visible_sleepers(config.lattice, config.camera, frame.true_mileage)
            got = [d.center_px.y for d in frame.oracle_detections]
            assert got == [off * r for _, off in expected]
            assert frame.measured_speed == frame.true_speed
            assert not any(frame.detection_is_fp)

    def test_same_seed_reproduces_byte_identical_csv(self, small_doc, tmp_path):
        config = scenario_from_dict(small_doc)
        paths = []
        for name in ("a.csv", "b.csv"):
            run = generate_run(config)
            path = tmp_path / name
            write_run_csv(run, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_different_seed_differs(self, small_doc):
        config = scenario_from_dict(small_doc)
        a = generate_run(config)
        b = generate_run(config.with_seed(config.sensor.seed + 1))
        assert any(fa.measured_speed != fb.measured_speed
                   for fa, fb in zip(a.frames, b.frames))

    def test_raster_flag_keeps_observations_identical(self, small_doc):
        doc = dict(small_doc)
        doc["route"] = dict(doc["route"])
        doc["route"]["stations_m"] = [0.0, 60.0]
        doc["route"]["total_length_m"] = 60.0
        doc["route"]["tunnel_segments_m"] = []
        doc["profile"] = dict(doc["profile"], cruise_mps=4.0)
        config_plain = scenario_from_dict(doc)
        config_raster = scenario_from_dict({**doc, "render_raster": True})
        run_plain = generate_run(config_plain)
        run_raster = generate_run(config_raster)
        for fa, fb in zip(run_plain.frames, run_raster.frames):
            assert fa.measured_speed == fb.measured_speed
            assert [d.center_px.y for d in fa.oracle_detections] == \
                   [d.center_px.y for d in fb.oracle_detections]
            assert fa.aerial_raster is None and fb.aerial_raster is not None

    def test_direct_integral_of_clean_speeds_recovers_route(self, small_doc):
        doc = dict(small_doc)
        doc["sensor"] = dict(doc["sensor"], speed_bias=0.0, speed_noise_sigma=0.0)
        config = scenario_from_dict(doc)
        run = generate_run(config)
        v = np.array([f.measured_speed for f in run.frames])
        distance = np.sum(0.5 * (v[1:] + v[:-1]) * config.dt)
        n_corners = 4 * config.route.interval_count + len(config.route.station_mileages)
        bound = n_corners * max(0.6, 0.6) * config.dt ** 2
        assert abs(distance - run.frames[-1].true_mileage) <= bound

    def test_run_csv_round_trip(self, small_doc, tmp_path):
        config = scenario_from_dict(small_doc)
        run = generate_run(config)
        path = tmp_path / "run.csv"
        write_run_csv(run, path)
        frames = read_run_frames(path, config.box_side_px, config.camera.strip_pixels)
        assert len(frames) == len(run.frames)
        for orig, loaded in zip(run.frames, frames):
            assert loaded.t == orig.t
            assert loaded.true_mileage == orig.true_mileage
            assert loaded.measured_speed == orig.measured_speed
            assert [d.center_px.y for d in loaded.oracle_detections] == \
                   [d.center_px.y for d in orig.oracle_detections]


class TestPgm:
    def test_writes_valid_header_and_payload(self, tmp_path):
        grid = np.linspace(0, 1, 12).reshape(3, 4)
        path = tmp_path / "frame_000000.pgm"
        write_pgm(grid, path)
        blob = path.read_bytes()
        assert blob.startswith(b"P5\n4 3\n255\n")
        assert len(blob) == len(b"P5\n4 3\n255\n") + 12
