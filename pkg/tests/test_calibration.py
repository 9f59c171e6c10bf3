"""
Tests for homographies, event warping and calibration files.
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from evtrack.calibration import (
    Homography,
    HomographyFactors,
    approximation_report,
    compose_homography,
    load_calibration,
    parse_calibration,
    pixel_homography,
    rotational_approximation,
    warp_events,
    warp_point,
)
from evtrack.events import Event, EventStream, SensorGeometry
from evtrack.exceptions import CalibrationError
from evtrack.utils import round_half_up


def random_rotation(rng):
    """Uniform random rotation from a QR decomposition."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def intrinsics(f, cx, cy):
    return np.array([[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]])


class TestHomography:
    """Test the Homography value type."""

    def test_identity(self):
        assert Homography.identity().transform_point(10, 20) == (10.0, 20.0)

    def test_translation(self):
        assert Homography.translation(5, -2).transform_point(1, 1) == (6.0, -1.0)

    def test_scale_normalized(self):
        """Scalar multiples are the same homography."""
        assert Homography(np.eye(3) * 4.0) == Homography.identity()
        assert Homography(-np.eye(3)) == Homography.identity()

    def test_matrix_read_only(self):
        with pytest.raises(ValueError):
            Homography.identity().matrix[0, 0] = 2.0

    def test_compose_and_inverse(self):
        """H composed with its inverse is the identity."""
        h = Homography([[1.1, 0.2, 3.0], [-0.1, 0.9, 1.0], [1e-4, 2e-4, 1.0]])
        product = h.compose(h.inverse()).matrix
        assert np.allclose(product, np.eye(3), atol=1e-12)

    def test_inverse_round_trip_points(self):
        """Warping a point forward then back returns it to within 1e-9 px."""
        rng = np.random.default_rng(21)
        K = intrinsics(400.0, 64.0, 48.0)
        for _ in range(50):
            R = Rotation.from_rotvec(rng.normal(scale=0.1, size=3)).as_matrix()
            h = pixel_homography(Homography(R), K, K)
            back = h.inverse()
            for x, y in rng.uniform(0, 128, (20, 2)):
                xr, yr = warp_point(back, warp_point(h, (x, y)))
                assert abs(xr - x) <= 1e-9
                assert abs(yr - y) <= 1e-9

    def test_compose_order(self):
        """compose applies the argument first."""
        scale = Homography(np.diag([2.0, 2.0, 1.0]))
        shift = Homography.translation(1, 0)
        assert scale.compose(shift).transform_point(0, 0) == (2.0, 0.0)
        assert shift.compose(scale).transform_point(0, 0) == (1.0, 0.0)

    def test_singular(self):
        with pytest.raises(CalibrationError):
            Homography([[1, 2, 3], [2, 4, 6], [0, 0, 1]])
        with pytest.raises(CalibrationError):
            Homography(np.zeros((3, 3)))

    def test_wrong_shape(self):
        with pytest.raises(CalibrationError):
            Homography(np.eye(2))

    def test_non_finite(self):
        m = np.eye(3)
        m[0, 1] = np.nan
        with pytest.raises(CalibrationError):
            Homography(m)

    def test_point_at_infinity(self):
        """Points whose third component vanishes are reported, not returned."""
        h = Homography([[0, 0, 1], [0, 1, 0], [1, 0, 0]])
        with pytest.raises(CalibrationError):
            warp_point(h, (0.0, 5.0))
        xw, yw, finite = h.transform_points(np.array([0.0, 2.0]), np.array([5.0, 4.0]))
        assert finite.tolist() == [False, True]
        assert np.isnan(xw[0])
        assert (xw[1], yw[1]) == (0.5, 2.0)

    def test_batch_matches_single(self):
        """Batch and single-point mapping agree exactly."""
        h = Homography([[1.1, 0.2, 3.0], [-0.1, 0.9, 1.0], [1e-4, 2e-4, 1.0]])
        rng = np.random.default_rng(0)
        xs, ys = rng.uniform(0, 640, 20), rng.uniform(0, 480, 20)
        bx, by, _ = h.transform_points(xs, ys)
        for k in range(20):
            assert h.transform_point(xs[k], ys[k]) == (bx[k], by[k])


class TestFactors:
    """Test plane-induced homographies."""

    def test_invalid_rotation(self):
        with pytest.raises(CalibrationError):
            HomographyFactors(R=np.diag([1.0, 1.0, -1.0]))
        with pytest.raises(CalibrationError):
            HomographyFactors(R=np.eye(3) * 2)

    def test_invalid_plane(self):
        with pytest.raises(CalibrationError):
            HomographyFactors(R=np.eye(3), n=(0.0, 0.0, 2.0))
        with pytest.raises(CalibrationError):
            HomographyFactors(R=np.eye(3), d=0.0)

    def test_ratio(self):
        f = HomographyFactors(R=np.eye(3), t=(0.003, 0.004, 0.0), d=5.0)
        assert f.ratio == pytest.approx(0.001)

    def test_rotation_only_is_exact(self):
        """With t = 0 the rotational approximation is the full homography."""
        R = random_rotation(np.random.default_rng(2))
        f = HomographyFactors(R=R)
        assert np.allclose(compose_homography(f).matrix, rotational_approximation(f).matrix,
                           atol=1e-15)

    def test_plane_points(self):
        """Both cameras' views of points on the plane are related by H."""
        rng = np.random.default_rng(123)
        for _ in range(100):
            R = random_rotation(rng)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            d = rng.uniform(1.0, 5.0)
            t = rng.normal(scale=0.5, size=3)
            factors = HomographyFactors(R=R, t=tuple(t), n=tuple(n), d=d)
            h = compose_homography(factors)

            a = np.cross(n, [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0])
            a /= np.linalg.norm(a)
            b = np.cross(n, a)
            for u, v in rng.uniform(-3.0, 3.0, size=(20, 2)):
                X1 = -d * n + u * a + v * b
                X2 = R @ X1 + t
                if abs(X1[2]) < 0.5 or abs(X2[2]) < 0.5:
                    continue
                x1 = X1[:2] / X1[2]
                x2 = X2[:2] / X2[2]
                mapped = h.transform_point(x1[0], x1[1])
                assert abs(mapped[0] - x2[0]) <= 1e-9
                assert abs(mapped[1] - x2[1]) <= 1e-9

    def test_pixel_homography(self):
        """K2 H K1^-1 with identity H maps K1 pixels to K2 pixels."""
        K1 = intrinsics(500.0, 320.0, 240.0)
        K2 = intrinsics(1000.0, 100.0, 50.0)
        h = pixel_homography(Homography.identity(), K1, K2)
        assert h.transform_point(320.0, 240.0) == pytest.approx((100.0, 50.0))
        assert h.transform_point(820.0, 240.0) == pytest.approx((1100.0, 50.0))

    def test_singular_intrinsics(self):
        with pytest.raises(CalibrationError):
            pixel_homography(Homography.identity(), np.zeros((3, 3)))


class TestApproximation:
    """Test the rotational-approximation error report."""

    def test_fronto_parallel_sideways(self):
        """Sideways baseline: every pixel shifts by f * |t| / d."""
        geometry = SensorGeometry(64, 48)
        K = intrinsics(1000.0, 32.0, 24.0)
        factors = HomographyFactors(R=np.eye(3), t=(0.001, 0.0, 0.0), d=1.0)
        report = approximation_report(factors, K, geometry, tolerance_px=1.5)
        assert report.ratio == pytest.approx(1e-3)
        assert report.max_deviation_px == pytest.approx(1.0, abs=1e-9)
        assert report.mean_deviation_px == pytest.approx(1.0, abs=1e-9)
        assert report.acceptable

    def test_fronto_parallel_axial(self):
        """Axial baseline: radial scaling about the principal point."""
        geometry = SensorGeometry(64, 48)
        K = intrinsics(1000.0, 32.0, 24.0)
        tz = 1e-3
        factors = HomographyFactors(R=np.eye(3), t=(0.0, 0.0, tz), d=1.0)
        report = approximation_report(factors, K, geometry)
        # farthest grid pixel from (32, 24) is (0, 0) at distance 40
        expected = 40.0 * tz / (1.0 - tz)
        assert report.max_deviation_px == pytest.approx(expected, rel=1e-9)

    def test_large_baseline_flagged(self):
        geometry = SensorGeometry(32, 32)
        K = intrinsics(1000.0, 16.0, 16.0)
        factors = HomographyFactors(R=np.eye(3), t=(0.05, 0.0, 0.0), d=1.0)
        report = approximation_report(factors, K, geometry, step=4)
        assert report.max_deviation_px == pytest.approx(50.0, abs=1e-6)
        assert not report.acceptable

    def test_small_baseline_bound(self):
        """With |t|/d <= 1e-3 and f = 1000 px the deviation stays near 1 px."""
        rng = np.random.default_rng(9)
        geometry = SensorGeometry(128, 128)
        K = intrinsics(1000.0, 64.0, 64.0)
        for _ in range(20):
            direction = rng.normal(size=3)
            t = direction / np.linalg.norm(direction) * 1e-3
            factors = HomographyFactors(R=np.eye(3), t=tuple(t), d=1.0)
            report = approximation_report(factors, K, geometry, step=8)
            assert report.max_deviation_px <= 1.2


class TestWarpEvents:
    """Test event warping."""

    GEOMETRY = SensorGeometry(10, 10)

    def stream(self):
        return EventStream.from_events(self.GEOMETRY, [
            Event(1, 0, 0, 1), Event(2, 5, 5, -1), Event(3, 9, 9, 1), Event(4, 2, 3, 1),
        ])

    def test_translation(self):
        """Pixels move; timestamps, polarities and order are kept."""
        result = warp_events(Homography.translation(1, 0), self.stream(), self.GEOMETRY)
        assert result.dropped == 1
        assert list(result.stream) == [
            Event(1, 1, 0, 1), Event(2, 6, 5, -1), Event(4, 3, 3, 1),
        ]

    def test_rounding(self):
        """Half-pixel positions round up."""
        result = warp_events(Homography.translation(0.5, -0.5), self.stream(), self.GEOMETRY)
        assert [(e.x, e.y) for e in result.stream][:2] == [(1, 0), (6, 5)]

    def test_target_geometry(self):
        """Events are placed on the target sensor."""
        target = SensorGeometry(20, 20)
        scale = Homography(np.diag([2.0, 2.0, 1.0]))
        result = warp_events(scale, self.stream(), target)
        assert result.dropped == 0
        assert result.stream.geometry == target
        assert [(e.x, e.y) for e in result.stream] == [(0, 0), (10, 10), (18, 18), (4, 6)]

    def test_identity(self):
        result = warp_events(Homography.identity(), self.stream(), self.GEOMETRY)
        assert result.stream == self.stream()
        assert result.dropped == 0

    def test_matches_warp_point(self):
        """Batch warping agrees with warp_point, rounded, event by event."""
        rng = np.random.default_rng(8)
        geometry = SensorGeometry(64, 48)
        K = intrinsics(80.0, 32.0, 24.0)
        n = 2000
        stream = EventStream.from_arrays(
            geometry,
            np.sort(rng.integers(0, 1_000_000, n)),
            rng.integers(0, geometry.width, n),
            rng.integers(0, geometry.height, n),
            rng.choice([-1, 1], n),
        )
        for _ in range(10):
            R = Rotation.from_rotvec(rng.normal(scale=0.1, size=3)).as_matrix()
            h = pixel_homography(Homography(R), K, K)
            expected, dropped = [], 0
            for e in stream:
                try:
                    xw, yw = warp_point(h, (e.x, e.y))
                except CalibrationError:
                    dropped += 1
                    continue
                x, y = round_half_up(xw), round_half_up(yw)
                if geometry.contains(x, y):
                    expected.append(Event(e.t, x, y, e.p))
                else:
                    dropped += 1
            result = warp_events(h, stream, geometry)
            assert list(result.stream) == expected
            assert result.dropped == dropped


CALIB_R = """
# rig
K1 = 500,0,320, 0,500,240, 0,0,1
K2 = 1000 0 64  0 1000 64  0 0 1
R  = 1,0,0, 0,1,0, 0,0,1
t  = 0.001, 0, 0
d  = 1
"""


class TestCalibrationFile:
    """Test the calibration file parser."""

    def test_parse_factors(self):
        calib = parse_calibration(CALIB_R)
        assert calib.H is None
        assert calib.factors.t == (0.001, 0.0, 0.0)
        assert calib.factors.n == (0.0, 0.0, 1.0)
        assert calib.K2[0, 0] == 1000.0

    def test_frame_to_event(self):
        """The principal point of camera 1 maps near the principal point of camera 2."""
        calib = parse_calibration(CALIB_R)
        x, y = calib.homography('frame2event').transform_point(320.0, 240.0)
        assert x == pytest.approx(64.0 - 1.0)
        assert y == pytest.approx(64.0)
        x, y = calib.homography('frame2event', rotational=True).transform_point(320.0, 240.0)
        assert (x, y) == pytest.approx((64.0, 64.0))

    def test_event_to_frame_is_inverse(self):
        calib = parse_calibration(CALIB_R)
        fwd = calib.homography('frame2event')
        back = calib.homography('event2frame')
        x, y = back.transform_point(*fwd.transform_point(100.0, 50.0))
        assert (x, y) == pytest.approx((100.0, 50.0))

    def test_direct_h(self):
        calib = parse_calibration("H = 1,0,2, 0,1,3, 0,0,1\n")
        assert calib.homography().transform_point(0, 0) == (2.0, 3.0)

    def test_bad_direction(self):
        with pytest.raises(CalibrationError):
            parse_calibration(CALIB_R).homography('sideways')

    @pytest.mark.parametrize("text", [
        "K1 = 1,0,0,0,1,0,0,0,1\n",                 # neither H nor R
        "H = 1,0,0,0,1,0,0,0,1\nR = 1,0,0,0,1,0,0,0,1\n",
        "H = 1,0,0,0,1,0,0,0,1\nt = 1,0,0\n",
        "R = 1,0,0,0,1,0\n",                        # wrong count
        "R = 1,0,0,0,1,0,0,0,1\nR = 1,0,0,0,1,0,0,0,1\n",
        "Q = 1\n",
        "R 1,0,0,0,1,0,0,0,1\n",
        "R = 1,0,0,0,1,0,0,0,x\n",
    ])
    def test_invalid(self, text):
        with pytest.raises(CalibrationError):
            parse_calibration(text)

    def test_load(self, tmp_path):
        path = tmp_path / "rig.calib"
        path.write_text(CALIB_R)
        assert load_calibration(path).factors.d == 1.0
