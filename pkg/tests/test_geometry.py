import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sleeperloc.errors import (
    ConfigInvalid,
    DegenerateConfiguration,
    NegativeDistance,
    PointAtInfinity,
    WrongArity,
    ZeroBaseline,
)
from sleeperloc.geometry import (
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

UNIT_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def pairs_from(src, tgt):
    return [PointPair(PixelPoint(*s), PixelPoint(*t)) for s, t in zip(src, tgt)]


def solve_homography_oracle(src, tgt):
    """Independent 9x9 formulation: A h = 0 rows plus the h22 = 1 pin."""
    rows = []
    rhs = []
    for (ax, ay), (bx, by) in zip(src, tgt):
        rows.append([-ax, -ay, -1, 0, 0, 0, ax * bx, ay * bx, bx])
        rhs.append(0.0)
        rows.append([0, 0, 0, -ax, -ay, -1, ax * by, ay * by, by])
        rhs.append(0.0)
    rows.append([0, 0, 0, 0, 0, 0, 0, 0, 1])
    rhs.append(1.0)
    return np.linalg.solve(np.array(rows, dtype=float), np.array(rhs)).reshape(3, 3)


def random_quad(rng, low=10.0, high=246.0):
    # One corner per quadrant of the pixel box keeps the points in general
    # position; the area check rejects the rare near-collinear draw.
    mid = (low + high) / 2.0
    boxes = [(low, mid - 10), (mid + 10, high)]
    while True:
        pts = [
            (rng.uniform(*boxes[0]), rng.uniform(*boxes[0])),
            (rng.uniform(*boxes[1]), rng.uniform(*boxes[0])),
            (rng.uniform(*boxes[1]), rng.uniform(*boxes[1])),
            (rng.uniform(*boxes[0]), rng.uniform(*boxes[1])),
        ]
        ok = True
        for i in range(4):
            a, b, c = (pts[j] for j in (i, (i + 1) % 4, (i + 2) % 4))
            area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if abs(area2) < 100.0:
                ok = False
        if ok:
            return pts


class TestEstimateHomography:
    def test_identity_from_matching_corners(self):
        h = estimate_homography(pairs_from(UNIT_SQUARE, UNIT_SQUARE))
        assert np.allclose(h.m, np.eye(3), atol=1e-12)

    def test_pure_scaling_is_diagonal(self):
        doubled = [(2 * x, 2 * y) for x, y in UNIT_SQUARE]
        h = estimate_homography(pairs_from(UNIT_SQUARE, doubled))
        assert np.allclose(h.m, np.diag([2.0, 2.0, 1.0]), atol=1e-12)

    def test_generic_quadrilateral_matches_independent_solver(self):
        tgt = [(12.0, 7.0), (230.0, 25.0), (200.0, 210.0), (30.0, 240.0)]
        src = [(0.0, 0.0), (100.0, 0.0), (100.0, 100.0), (0.0, 100.0)]
        h = estimate_homography(pairs_from(src, tgt))
        expected = solve_homography_oracle(src, tgt)
        assert np.max(np.abs(h.m - expected)) < 1e-9

    def test_wrong_number_of_pairs(self):
        pairs = pairs_from(UNIT_SQUARE, UNIT_SQUARE)
        with pytest.raises(WrongArity):
            estimate_homography(pairs[:3])
        with pytest.raises(WrongArity):
            estimate_homography(pairs + pairs[:1])

    def test_collinear_sources_are_degenerate(self):
        src = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (0.0, 5.0)]
        with pytest.raises(DegenerateConfiguration):
            estimate_homography(pairs_from(src, UNIT_SQUARE))

    def test_duplicate_point_is_degenerate(self):
        src = [(0.0, 0.0), (0.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        with pytest.raises(DegenerateConfiguration):
            estimate_homography(pairs_from(src, UNIT_SQUARE))


class TestApplyHomography:
    def test_identity_keeps_point(self):
        p = apply_homography(Homography.identity(), PixelPoint(3.5, 7.0))
        assert (p.x, p.y) == (3.5, 7.0)

    def test_scaling(self):
        p = apply_homography(Homography(np.diag([2.0, 2.0, 1.0])), PixelPoint(1.0, 1.0))
        assert (p.x, p.y) == (2.0, 2.0)

    def test_closure_over_defining_pairs(self):
        src = random_quad(np.random.default_rng(7))
        tgt = random_quad(np.random.default_rng(8))
        pairs = pairs_from(src, tgt)
        h = estimate_homography(pairs)
        for pair in pairs:
            mapped = apply_homography(h, pair.source)
            assert abs(mapped.x - pair.target.x) < 1e-9
            assert abs(mapped.y - pair.target.y) < 1e-9

    def test_point_at_infinity(self):
        h = Homography(np.array([[1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 1.0]]))
        with pytest.raises(PointAtInfinity):
            apply_homography(h, PixelPoint(0.0, 1.0))


class TestInvertHomography:
    def test_identity(self):
        assert np.allclose(invert_homography(Homography.identity()).m, np.eye(3))

    def test_diagonal_analytic_inverse(self):
        inv = invert_homography(Homography(np.diag([2.0, 2.0, 1.0])))
        assert np.allclose(inv.m, np.diag([0.5, 0.5, 1.0]), atol=1e-12)

    def test_round_trip_random_points(self):
        rng = np.random.default_rng(42)
        h = estimate_homography(pairs_from(random_quad(rng), random_quad(rng)))
        inv = invert_homography(h)
        for _ in range(100):
            p = PixelPoint(rng.uniform(0, 256), rng.uniform(0, 256))
            q = apply_homography(inv, apply_homography(h, p))
            assert abs(q.x - p.x) < 1e-8 and abs(q.y - p.y) < 1e-8


class TestWarpRaster:
    def test_identity_returns_same_grid(self):
        rng = np.random.default_rng(3)
        grid = rng.random((20, 30))
        out = warp_raster(Homography.identity(), grid, 30, 20)
        assert np.allclose(out, grid, atol=1e-12)

    def test_downscaling_an_upsampled_constant_is_constant(self):
        src = np.full((32, 32), 0.7)
        out = warp_raster(Homography(np.diag([2.0, 2.0, 1.0])), src, 16, 16)
        assert np.allclose(out, 0.7, atol=1e-12)

    def test_checkerboard_round_trip(self):
        n = 128
        yy, xx = np.mgrid[0:n, 0:n]
        checker = (((yy // 16) + (xx // 16)) % 2).astype(float)
        src = [(0.0, 0.0), (127.0, 0.0), (127.0, 127.0), (0.0, 127.0)]
        tgt = [(4.0, 2.0), (125.0, 6.0), (122.0, 124.0), (2.0, 120.0)]
        h = estimate_homography(pairs_from(src, tgt))
        back = warp_raster(invert_homography(h), warp_raster(h, checker, n, n), n, n)
        interior = np.s_[2:-2, 2:-2]
        # Interior comparison only where the forward warp kept data in frame.
        mask = warp_raster(h, np.ones((n, n)), n, n)
        mask = warp_raster(invert_homography(h), mask, n, n)[interior] > 0.99
        err = np.abs(back[interior] - checker[interior])[mask]
        assert err.mean() < 0.05

    def test_rejects_empty_output(self):
        with pytest.raises(ValueError):
            warp_raster(Homography.identity(), np.ones((4, 4)), 0, 4)


class TestPixelScale:
    def test_sixty_pixels_per_point_six_meters(self):
        scale = calibrate_pixel_scale((PixelPoint(10, 40), PixelPoint(10, 100)), 0.6)
        assert scale.pixels_per_meter == pytest.approx(100.0)

    def test_unit_ratio(self):
        scale = calibrate_pixel_scale((PixelPoint(0, 0), PixelPoint(0, 1)), 1.0)
        assert scale.pixels_per_meter == 1.0

    def test_coincident_points_rejected(self):
        with pytest.raises(ZeroBaseline):
            calibrate_pixel_scale((PixelPoint(0, 5), PixelPoint(3, 5)), 1.0)

    def test_nonpositive_world_distance_rejected(self):
        with pytest.raises(ZeroBaseline):
            calibrate_pixel_scale((PixelPoint(0, 0), PixelPoint(0, 1)), 0.0)

    def test_pixel_to_world_values(self):
        assert pixel_to_world(PixelScale(100.0), 50.0) == pytest.approx(0.5)
        assert pixel_to_world(PixelScale(100.0), 0.0) == 0.0
        assert pixel_to_world(PixelScale(1.0), 7.25) == 7.25

    def test_negative_pixel_distance_rejected(self):
        with pytest.raises(NegativeDistance):
            pixel_to_world(PixelScale(100.0), -1.0)


class TestInvariants:
    def test_exact_interpolation_random_quads(self):
        rng = np.random.default_rng(123)
        for _ in range(50):
            pairs = pairs_from(random_quad(rng), random_quad(rng))
            h = estimate_homography(pairs)
            for pair in pairs:
                mapped = apply_homography(h, pair.source)
                assert abs(mapped.x - pair.target.x) < 1e-9
                assert abs(mapped.y - pair.target.y) < 1e-9

    @given(st.floats(min_value=1e-6, max_value=1e6).filter(lambda c: c != 0))
    def test_projective_scale_invariance(self, c):
        base = np.array([[2.0, 0.5, 3.0], [0.1, 1.5, -2.0], [0.001, 0.002, 1.0]])
        assert np.allclose(Homography(base * c).m, Homography(base).m,
                           rtol=1e-12, atol=1e-12)

    def test_composition_consistency(self):
        rng = np.random.default_rng(5)
        h1 = estimate_homography(pairs_from(random_quad(rng), random_quad(rng)))
        h2 = estimate_homography(pairs_from(random_quad(rng), random_quad(rng)))
        chained = Homography(h2.m @ h1.m)
        for _ in range(20):
            p = PixelPoint(rng.uniform(20, 230), rng.uniform(20, 230))
            a = apply_homography(h2, apply_homography(h1, p))
            b = apply_homography(chained, p)
            assert abs(a.x - b.x) < 1e-8 and abs(a.y - b.y) < 1e-8

    @given(st.floats(min_value=0, max_value=1e4), st.floats(min_value=0, max_value=1e4))
    def test_pixel_to_world_is_linear(self, a, b):
        scale = PixelScale(100.0)
        together = pixel_to_world(scale, a + b)
        split = pixel_to_world(scale, a) + pixel_to_world(scale, b)
        assert abs(together - split) < 1e-12


class TestCalibrationFile:
    def test_round_trip(self, tmp_path):
        doc = {
            "pairs": [[0, 0, 10, 5], [100, 0, 220, 30], [100, 100, 200, 260], [0, 100, 20, 240]],
            "axis_points": [[10, 40], [10, 100]],
            "axis_world_m": 0.6,
        }
        path = tmp_path / "cal.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        pairs, axis, world = load_calibration(path)
        assert len(pairs) == 4
        assert pairs[1].target.x == 220.0
        assert calibrate_pixel_scale(axis, world).pixels_per_meter == pytest.approx(100.0)

    def test_malformed_file_rejected(self, tmp_path):
        path = tmp_path / "cal.json"
        path.write_text('{"pairs": [[1,2,3,4]]}', encoding="utf-8")
        with pytest.raises(ConfigInvalid):
            load_calibration(path)
        path.write_text("not json", encoding="utf-8")
        with pytest.raises(ConfigInvalid):
            load_calibration(path)
