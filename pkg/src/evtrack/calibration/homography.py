"""
Plane-induced homographies between the frame camera and the event camera.

A world plane n^T X + d = 0 (first-camera coordinates) seen by a second
camera at pose X2 = R X + t induces, on normalized image coordinates,

    H = R - t n^T / d

When the camera centres nearly coincide (beamsplitter rigs) t/d is small and
H ~ R. Pixel-domain maps are K2 H K1^-1.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from evtrack.events import EventStream, SensorGeometry
from evtrack.exceptions import CalibrationError

# Homogeneous third components smaller than this map to infinity.
INFINITY_EPS = 1e-12
# Relative determinant below which a matrix counts as singular.
SINGULAR_EPS = 1e-12


def _normalize(m: np.ndarray) -> np.ndarray:
    """Fix the projective scale: H[2][2] = 1, else largest bottom-row entry positive."""
    m = np.array(m, dtype=np.float64)
    if m[2, 2] != 0.0:
        return m / m[2, 2]
    k = int(np.argmax(np.abs(m[2])))
    if m[2, k] < 0:
        return -m
    return m


class Homography:
    """
    3x3 projective map on homogeneous pixel coordinates.

    Stored row-major and normalized (see _normalize). Instances are immutable.
    """

    def __init__(self, matrix: Sequence[Sequence[float]]):
        m = np.asarray(matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise CalibrationError(f"Homography must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise CalibrationError("Homography has non-finite entries")
        scale = np.max(np.abs(m))
        if scale == 0.0 or abs(np.linalg.det(m / scale)) < SINGULAR_EPS:
            raise CalibrationError("Homography is singular (degenerate geometry)")
        m = _normalize(m)
        m.flags.writeable = False
        self._m = m

    @classmethod
    def identity(cls) -> 'Homography':
        """Create the identity map."""
        return cls(np.eye(3))

    @classmethod
    def translation(cls, tx: float, ty: float = 0.0) -> 'Homography':
        """Create a pixel translation."""
        return cls([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])

    @property
    def matrix(self) -> np.ndarray:
        """Read-only 3x3 matrix."""
        return self._m

    def compose(self, other: 'Homography') -> 'Homography':
        """Matrix product self * other (apply other first)."""
        return Homography(self._m @ other._m)

    def inverse(self) -> 'Homography':
        """Inverse map."""
        return Homography(np.linalg.inv(self._m))

    def transform_points(self, x: np.ndarray, y: np.ndarray
                         ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Map pixel arrays through H.

        Returns:
            (x', y', finite) where finite marks points whose homogeneous third
            component is not within INFINITY_EPS of zero; x', y' are NaN elsewhere.
        """
        h = self._m
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        # Written out elementwise so one point and a batch round identically.
        X = h[0, 0] * x + h[0, 1] * y + h[0, 2]
        Y = h[1, 0] * x + h[1, 1] * y + h[1, 2]
        W = h[2, 0] * x + h[2, 1] * y + h[2, 2]
        finite = np.abs(W) > INFINITY_EPS
        safe_w = np.where(finite, W, 1.0)
        xw = np.where(finite, X / safe_w, np.nan)
        yw = np.where(finite, Y / safe_w, np.nan)
        return xw, yw, finite

    def transform_point(self, x: float, y: float) -> Tuple[float, float]:
        """Map one pixel; raises CalibrationError at infinity."""
        xw, yw, finite = self.transform_points(np.array([x]), np.array([y]))
        if not finite[0]:
            raise CalibrationError(f"Point ({x}, {y}) maps to infinity")
        return float(xw[0]), float(yw[0])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Homography):
            return NotImplemented
        return np.array_equal(self._m, other._m)

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(f"{v:.6g}" for v in row) + "]" for row in self._m)
        return f"Homography([{rows}])"


@dataclass(frozen=True)
class HomographyFactors:
    """
    Factors of a plane-induced homography.

    R: rotation (3x3), t: translation, n: unit plane normal, d: plane offset > 0.
    """
    R: Tuple[Tuple[float, ...], ...]
    t: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    n: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    d: float = 1.0

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        if R.shape != (3, 3):
            raise CalibrationError(f"R must be 3x3, got shape {R.shape}")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9) or np.linalg.det(R) <= 0:
            raise CalibrationError("R is not a proper rotation")
        if abs(np.linalg.norm(self.n) - 1.0) > 1e-9:
            raise CalibrationError(f"Plane normal must be unit length, got {self.n}")
        if not self.d > 0:
            raise CalibrationError(f"Plane offset d must be positive, got {self.d}")
        # Store canonical tuples so the dataclass stays hashable.
        object.__setattr__(self, 'R', tuple(tuple(float(v) for v in row) for row in R))
        object.__setattr__(self, 't', tuple(float(v) for v in self.t))
        object.__setattr__(self, 'n', tuple(float(v) for v in self.n))
        object.__setattr__(self, 'd', float(self.d))

    @property
    def rotation(self) -> np.ndarray:
        return np.array(self.R)

    @property
    def ratio(self) -> float:
        """||t|| / d, the size of the translational term."""
        return float(np.linalg.norm(self.t)) / self.d


def compose_homography(factors: HomographyFactors) -> Homography:
    """
    H = R - t n^T / d.

    Raises:
        CalibrationError: If the result is singular
    """
    t = np.asarray(factors.t).reshape(3, 1)
    n = np.asarray(factors.n).reshape(1, 3)
    return Homography(factors.rotation - (t @ n) / factors.d)


def rotational_approximation(factors: HomographyFactors) -> Homography:
    """H ~ R, exact when t = 0."""
    return Homography(factors.rotation)


def pixel_homography(h: Homography, K1: Optional[np.ndarray] = None,
                     K2: Optional[np.ndarray] = None) -> Homography:
    """Lift a normalized-coordinate homography to pixels: K2 H K1^-1."""
    K1 = np.eye(3) if K1 is None else np.asarray(K1, dtype=np.float64)
    K2 = np.eye(3) if K2 is None else np.asarray(K2, dtype=np.float64)
    try:
        K1_inv = np.linalg.inv(K1)
    except np.linalg.LinAlgError:
        raise CalibrationError("Intrinsic matrix K1 is singular")
    return Homography(K2 @ h.matrix @ K1_inv)


def warp_point(h: Homography, pt: Tuple[float, float]) -> Tuple[float, float]:
    """Dehomogenized H (x, y, 1)^T; raises CalibrationError at infinity."""
    return h.transform_point(pt[0], pt[1])


@dataclass
class WarpResult:
    """Output of warp_events."""
    stream: EventStream
    dropped: int


def warp_events(h: Homography, stream: EventStream, target: SensorGeometry) -> WarpResult:
    """
    Move every event to its warped pixel, rounded to the nearest integer.

    Events that map to infinity or land outside target are dropped and
    counted; timestamps, polarities and order are preserved.
    """
    xw, yw, finite = h.transform_points(stream.x, stream.y)
    with np.errstate(invalid='ignore'):
        xr = np.floor(xw + 0.5)
        yr = np.floor(yw + 0.5)
        keep = finite & (xr >= 0) & (xr < target.width) & (yr >= 0) & (yr < target.height)

    events = stream.array[keep].copy()
    events['x'] = xr[keep].astype(np.uint16)
    events['y'] = yr[keep].astype(np.uint16)
    dropped = len(stream) - int(np.count_nonzero(keep))
    if dropped:
        logger.warning("warp dropped {} of {} events", dropped, len(stream))
    return WarpResult(EventStream(target, events), dropped)


@dataclass(frozen=True)
class ApproximationReport:
    """Deviation between the full homography and its rotational part."""
    ratio: float
    max_deviation_px: float
    mean_deviation_px: float
    tolerance_px: float

    @property
    def acceptable(self) -> bool:
        return self.max_deviation_px <= self.tolerance_px


def approximation_report(factors: HomographyFactors, K: np.ndarray,
                         geometry: SensorGeometry, step: int = 1,
                         tolerance_px: float = 1.0,
                         K2: Optional[np.ndarray] = None) -> ApproximationReport:
    """
    Compare H = R - t n^T / d with H ~ R over a dense pixel grid.

    Args:
        factors: Homography factors
        K: Intrinsics of the source camera (and of the target if K2 is None)
        geometry: Source image size; the grid covers every step-th pixel
        step: Grid spacing in pixels
        tolerance_px: Largest deviation still considered acceptable
        K2: Target intrinsics

    Returns:
        ApproximationReport with max and mean deviation in target pixels
    """
    K2 = K if K2 is None else K2
    full = pixel_homography(compose_homography(factors), K, K2)
    approx = pixel_homography(rotational_approximation(factors), K, K2)

    xs, ys = np.meshgrid(np.arange(0, geometry.width, step, dtype=np.float64),
                         np.arange(0, geometry.height, step, dtype=np.float64))
    fx, fy, f_ok = full.transform_points(xs.ravel(), ys.ravel())
    ax, ay, a_ok = approx.transform_points(xs.ravel(), ys.ravel())
    ok = f_ok & a_ok
    deviation = np.hypot(fx[ok] - ax[ok], fy[ok] - ay[ok])

    report = ApproximationReport(
        ratio=factors.ratio,
        max_deviation_px=float(deviation.max()) if deviation.size else 0.0,
        mean_deviation_px=float(deviation.mean()) if deviation.size else 0.0,
        tolerance_px=tolerance_px,
    )
    if not report.acceptable:
        logger.warning(
            "rotational approximation deviates up to {:.3f} px (|t|/d = {:.3g})",
            report.max_deviation_px, report.ratio,
        )
    return report
