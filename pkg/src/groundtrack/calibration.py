"""Pinhole camera model over a ground plane.

The camera is a 3x4 projection P = K [R | t] mapping homogeneous world points
to image points.  The world frame is right-handed with the ground plane at
Z = 0 and +Z pointing up, so a heading angle that increases over time is a
counterclockwise (left) turn when seen from above.  ``scale`` converts world
units into meters; all public distances are metric.

A model can be built four ways: from a given P, from given (K, R, t), from two
ground vanishing points, or from two annotated sets of parallel line segments
(from which the vanishing points are estimated by least squares).  The
two-vanishing-point construction assumes square pixels, zero skew and the
principal point at the image center; metric scale then comes from either a
ground segment of known length or a known camera height.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    BehindCameraError,
    CalibrationError,
    DegenerateGeometryError,
    HorizonError,
)

# |w| below this marks a homogeneous image point at infinity.
AT_INFINITY_W = 1e-12

_ORTHONORMAL_TOL = 1e-9


def dehomogenize(point_h: np.ndarray) -> np.ndarray:
    """Convert a homogeneous image point to pixel coordinates."""
    point_h = np.asarray(point_h, dtype=float)
    if abs(point_h[2]) < AT_INFINITY_W:
        raise HorizonError("cannot dehomogenize a point at infinity")
    return point_h[:2] / point_h[2]


def is_at_infinity(point_h: np.ndarray) -> bool:
    return abs(float(np.asarray(point_h)[2])) < AT_INFINITY_W


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Immutable calibrated camera.

    Derived members (P, vanishing points, camera center) are computed once at
    construction; every operation on the model is pure, so instances are safe
    to share across threads.
    """

    K: np.ndarray
    R: np.ndarray
    t: np.ndarray
    image_size: tuple[int, int]
    scale: float = 1.0  # meters per world unit
    P: np.ndarray = field(init=False)
    vp_u: np.ndarray = field(init=False)  # image of world +X at infinity (motion axis)
    vp_v: np.ndarray = field(init=False)  # image of world +Y at infinity
    vp_w: np.ndarray = field(init=False)  # image of world +Z at infinity (vertical)

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        R = np.array(self.R, dtype=float)
        t = np.array(self.t, dtype=float).reshape(3)
        if K.shape != (3, 3) or R.shape != (3, 3):
            raise CalibrationError("K and R must be 3x3")
        if abs(K[1, 0]) > 1e-9 or abs(K[2, 0]) > 1e-9 or abs(K[2, 1]) > 1e-9:
            raise CalibrationError("K must be upper triangular")
        if K[0, 0] <= 0 or K[1, 1] <= 0 or K[2, 2] <= 0:
            raise CalibrationError("K must have a positive diagonal")
        if np.abs(R.T @ R - np.eye(3)).max() > _ORTHONORMAL_TOL:
            raise CalibrationError("R is not orthonormal")
        if np.linalg.det(R) < 0:
            raise CalibrationError("R must be a proper rotation (det +1)")
        if self.scale <= 0:
            raise CalibrationError("scale must be positive")
        center = -R.T @ t
        if abs(center[2]) < 1e-9:
            raise CalibrationError("ground plane passes through the camera center")
        P = K @ np.hstack([R, t.reshape(3, 1)])
        for arr in (K, R, t, P):
            arr.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "P", P)
        for name, col in (("vp_u", 0), ("vp_v", 1), ("vp_w", 2)):
            vp = P[:, col].copy()
            vp.setflags(write=False)
            object.__setattr__(self, name, vp)

    @property
    def center(self) -> np.ndarray:
        """Camera center in world units."""
        return -self.R.T @ self.t

    @property
    def center_m(self) -> np.ndarray:
        """Camera center in meters."""
        return self.center * self.scale

    @property
    def horizon_line(self) -> np.ndarray:
        """Image line (a, b, c) of the ground plane's points at infinity."""
        line = np.cross(self.vp_u, self.vp_v)
        return line / np.linalg.norm(line[:2])


# ---------------------------------------------------------------------------
# Vanishing point estimation
# ---------------------------------------------------------------------------

def _segment_lines(segments) -> tuple[np.ndarray, np.ndarray]:
    """Supporting lines of the segments as unit-normal coefficients (n, c)."""
    normals = []
    offsets = []
    for seg in segments:
        p0 = np.asarray(seg[0], dtype=float)
        p1 = np.asarray(seg[1], dtype=float)
        d = p1 - p0
        length = np.linalg.norm(d)
        if length < 1e-12:
            raise DegenerateGeometryError("segment endpoints coincide")
        n = np.array([-d[1], d[0]]) / length
        normals.append(n)
        offsets.append(-float(n @ p0))
    return np.array(normals), np.array(offsets)


def estimate_vanishing_point(segments) -> np.ndarray:
    """Least-squares intersection point of a set of image line segments.

    Returns the homogeneous image point minimizing the sum of squared
    perpendicular distances to the segments' supporting lines.  Segments that
    are exactly parallel in the image yield a point at infinity in their
    shared direction.

    Raises DegenerateGeometryError when fewer than two segments are given or
    all segments lie on a single line.
    """
    normals, offsets = _segment_lines(segments)
    if len(normals) < 2:
        raise DegenerateGeometryError("need at least two segments")

    # Normal equations of min_x sum (n_i . x + c_i)^2 over finite points x.
    M = normals.T @ normals
    b = normals.T @ offsets
    eigvals = np.linalg.eigvalsh(M)
    if eigvals[0] > 1e-12 * max(eigvals[1], 1.0):
        x = np.linalg.solve(M, -b)
        return np.array([x[0], x[1], 1.0])

    # All lines parallel: align normal signs and check for collinearity.
    ref = normals[0]
    signs = np.where(normals @ ref >= 0, 1.0, -1.0)
    aligned_offsets = offsets * signs
    if np.ptp(aligned_offsets) < 1e-9 * (1.0 + np.abs(aligned_offsets).max()):
        raise DegenerateGeometryError("all segments are collinear")
    direction = np.array([ref[1], -ref[0]])
    return np.array([direction[0], direction[1], 0.0])


# ---------------------------------------------------------------------------
# Model construction
# ---------------------------------------------------------------------------

def _resolve_height(camera_unit: CameraModel, scale_segment, camera_height_m) -> float:
    """Camera height in meters from one of the two supported scale references."""
    if (scale_segment is None) == (camera_height_m is None):
        raise CalibrationError(
            "exactly one of scale_segment or camera_height_m must be given"
        )
    if camera_height_m is not None:
        if camera_height_m <= 0:
            raise CalibrationError("camera height must be positive")
        return float(camera_height_m)
    a, b, meters = scale_segment
    if meters <= 0:
        raise CalibrationError("scale segment length must be positive")
    ga = reproject_image_to_ground(camera_unit, np.asarray(a, dtype=float))
    gb = reproject_image_to_ground(camera_unit, np.asarray(b, dtype=float))
    span = np.linalg.norm(ga - gb)
    if span < 1e-12:
        raise CalibrationError("scale segment endpoints reproject to the same point")
    # Ground distances scale linearly with camera height.
    return float(meters / span)


def camera_from_vanishing_points(
    vp_u,
    vp_v,
    image_size: tuple[int, int],
    *,
    scale_segment=None,
    camera_height_m=None,
) -> CameraModel:
    """Build a metric camera from the two ground-direction vanishing points.

    Assumes square pixels, zero skew and the principal point at the image
    center; the focal length then follows from the orthogonality of the two
    ground directions.  ``scale_segment`` is ((ax, ay), (bx, by), meters) for
    a ground segment of known length; ``camera_height_m`` pins the scale via
    the camera's height above the ground instead.
    """
    u = np.asarray(vp_u, dtype=float).reshape(2)
    v = np.asarray(vp_v, dtype=float).reshape(2)
    if np.linalg.norm(u - v) < 1e-9:
        raise CalibrationError("vanishing points must be distinct")
    width, height = image_size
    principal = np.array([width / 2.0, height / 2.0])
    a = u - principal
    b = v - principal
    f_sq = -float(a @ b)
    if f_sq <= 1e-9:
        raise CalibrationError(
            "vanishing points incompatible with centered principal point"
        )
    f = float(np.sqrt(f_sq))
    K = np.array([[f, 0.0, principal[0]], [0.0, f, principal[1]], [0.0, 0.0, 1.0]])

    # Back-projected directions of the two vanishing points are the world X
    # and Y axes expressed in the camera frame.
    r1 = np.array([a[0] / f, a[1] / f, 1.0])
    r1 /= np.linalg.norm(r1)
    if r1[2] < 0:
        r1 = -r1  # +X recedes from the camera
    r2 = np.array([b[0] / f, b[1] / f, 1.0])
    r2 -= (r2 @ r1) * r1
    r2 /= np.linalg.norm(r2)
    r3 = np.cross(r1, r2)
    if r3[2] > 0:
        # Camera must sit above the ground plane and see it in front.
        r2, r3 = -r2, -r3
    R = np.column_stack([r1, r2, r3])

    unit_model = CameraModel(K, R, -R @ np.array([0.0, 0.0, 1.0]), image_size, scale=1.0)
    h = _resolve_height(unit_model, scale_segment, camera_height_m)
    t = -R @ np.array([0.0, 0.0, h])
    return CameraModel(K, R, t, image_size, scale=1.0)


def camera_from_krt(
    K,
    R,
    t,
    image_size: tuple[int, int],
    *,
    scale_segment=None,
    camera_height_m=None,
) -> CameraModel:
    """Wrap given intrinsics/extrinsics, optionally fixing the metric scale.

    Without a scale reference the world units are assumed to already be
    meters (scale 1).
    """
    model = CameraModel(K, R, t, image_size, scale=1.0)
    if scale_segment is None and camera_height_m is None:
        return model
    if camera_height_m is not None:
        scale = float(camera_height_m) / abs(float(model.center[2]))
    else:
        a, b, meters = scale_segment
        ga = reproject_image_to_ground(model, np.asarray(a, dtype=float))
        gb = reproject_image_to_ground(model, np.asarray(b, dtype=float))
        span = np.linalg.norm(ga - gb)
        if span < 1e-12:
            raise CalibrationError("scale segment endpoints reproject to the same point")
        scale = float(meters) / float(span)
    if scale <= 0:
        raise CalibrationError("derived scale must be positive")
    return CameraModel(model.K, model.R, model.t, image_size, scale=scale)


def camera_from_projection(
    P,
    image_size: tuple[int, int],
    *,
    scale_segment=None,
    camera_height_m=None,
) -> CameraModel:
    """Decompose a 3x4 projection matrix into K, R, t and wrap it."""
    P = np.asarray(P, dtype=float)
    if P.shape != (3, 4):
        raise CalibrationError("projection matrix must be 3x4")
    M = P[:, :3]
    if abs(np.linalg.det(M)) < 1e-12:
        raise CalibrationError("projection matrix is singular")
    if np.linalg.det(M) < 0:
        P = -P
        M = -M
    K, R = scipy.linalg.rq(M)
    signs = np.sign(np.diag(K))
    signs[signs == 0] = 1.0
    K = K * signs[np.newaxis, :]
    R = R * signs[:, np.newaxis]
    kappa = K[2, 2]
    K = K / kappa
    t = np.linalg.solve(K, P[:, 3] / kappa)
    return camera_from_krt(
        K, R, t, image_size,
        scale_segment=scale_segment, camera_height_m=camera_height_m,
    )


# ---------------------------------------------------------------------------
# Projection and reprojection
# ---------------------------------------------------------------------------

def project_world_to_image(camera: CameraModel, point_m) -> np.ndarray:
    """Project a world 3-point given in meters to pixel coordinates."""
    X = np.asarray(point_m, dtype=float).reshape(3) / camera.scale
    x_h = camera.P @ np.append(X, 1.0)
    if abs(x_h[2]) < AT_INFINITY_W:
        raise HorizonError("point projects to infinity")
    return x_h[:2] / x_h[2]


def project_ground_points(camera: CameraModel, points_m: np.ndarray) -> np.ndarray:
    """Project (n, 2) ground-plane points (meters, Z=0) to (n, 2) pixels."""
    pts = np.asarray(points_m, dtype=float).reshape(-1, 2) / camera.scale
    homog = np.column_stack([pts, np.zeros(len(pts)), np.ones(len(pts))])
    img = homog @ camera.P.T
    w = img[:, 2]
    if np.any(np.abs(w) < AT_INFINITY_W):
        raise HorizonError("a ground point projects to infinity")
    return img[:, :2] / w[:, np.newaxis]


def reproject_points_to_ground(
    camera: CameraModel, points_px: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Batch ray-cast image points onto the ground plane.

    Returns (ground_points_m, ok) where ok flags points whose ray hits the
    plane at a finite point in front of the camera.  Invalid rows are NaN.
    """
    pts = np.atleast_2d(np.asarray(points_px, dtype=float))
    homog = np.column_stack([pts, np.ones(len(pts))])
    directions = homog @ np.linalg.inv(camera.K).T @ camera.R  # rows: world ray dirs
    center = camera.center
    dz = directions[:, 2]
    norms = np.linalg.norm(directions, axis=1)
    parallel = np.abs(dz) < AT_INFINITY_W * norms
    with np.errstate(divide="ignore", invalid="ignore"):
        s = -center[2] / dz
    ok = ~parallel & (s > 0)
    ground = center[np.newaxis, :2] + s[:, np.newaxis] * directions[:, :2]
    ground[~ok] = np.nan
    return ground * camera.scale, ok


def reproject_image_to_ground(camera: CameraModel, point_px) -> np.ndarray:
    """Ray-cast one image point onto the ground plane; result in meters.

    Raises HorizonError when the ray is parallel to the plane and
    BehindCameraError when the intersection lies behind the camera.
    """
    pts = np.asarray(point_px, dtype=float).reshape(1, 2)
    homog = np.append(pts[0], 1.0)
    direction = camera.R.T @ np.linalg.solve(camera.K, homog)
    if abs(direction[2]) < AT_INFINITY_W * np.linalg.norm(direction):
        raise HorizonError("image point lies on the horizon")
    s = -camera.center[2] / direction[2]
    if s <= 0:
        raise BehindCameraError("ground intersection is behind the camera")
    ground = camera.center[:2] + s * direction[:2]
    return ground * camera.scale


def vanishing_point_of_ground_direction(camera: CameraModel, direction) -> np.ndarray:
    """Image of the point at infinity of a ground direction, homogeneous.

    ``direction`` is a unit 2-vector on the ground plane.  The result may be
    at infinity itself (|w| < AT_INFINITY_W); use ``is_at_infinity`` to check
    before dehomogenizing.
    """
    d = np.asarray(direction, dtype=float).reshape(2)
    norm = np.linalg.norm(d)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError("direction must be a unit vector")
    return camera.P @ np.array([d[0], d[1], 0.0, 0.0])


def vertical_vanishing_point(camera: CameraModel) -> np.ndarray:
    """Image of the world vertical direction, homogeneous."""
    return camera.vp_w.copy()


# ---------------------------------------------------------------------------
# Calibration file loading
# ---------------------------------------------------------------------------

_CORE_KEYS = ("P", "K", "vp_u", "parallel_lines")


def load_calibration(data: dict) -> CameraModel:
    """Build a camera from a calibration dictionary.

    Exactly one of the following key sets selects the construction:
      {"P": 3x4} | {"K": 3x3, "R": 3x3, "t": [3]} | {"vp_u": [2], "vp_v": [2]}
      | {"parallel_lines": {"u": [segments], "v": [segments]}}
    plus "image_size": [w, h] and a scale reference, either
      {"scale_segment": {"a": [2], "b": [2], "meters": L}} or
      {"camera_height_m": h}.
    The scale reference is required for the vanishing-point forms and
    optional for P / (K, R, t), whose world units are then taken as meters.
    """
    present = [k for k in _CORE_KEYS if k in data]
    if len(present) != 1:
        raise CalibrationError(
            f"calibration must contain exactly one of {_CORE_KEYS}, found {present}"
        )
    if "image_size" not in data:
        raise CalibrationError("calibration must contain image_size")
    image_size = tuple(int(x) for x in data["image_size"])

    scale_segment = None
    camera_height_m = data.get("camera_height_m")
    if "scale_segment" in data:
        seg = data["scale_segment"]
        scale_segment = (seg["a"], seg["b"], float(seg["meters"]))

    kind = present[0]
    if kind == "P":
        return camera_from_projection(
            np.asarray(data["P"], dtype=float), image_size,
            scale_segment=scale_segment, camera_height_m=camera_height_m,
        )
    if kind == "K":
        if "R" not in data or "t" not in data:
            raise CalibrationError("K form requires R and t")
        return camera_from_krt(
            np.asarray(data["K"], dtype=float),
            np.asarray(data["R"], dtype=float),
            np.asarray(data["t"], dtype=float),
            image_size,
            scale_segment=scale_segment, camera_height_m=camera_height_m,
        )

    if kind == "parallel_lines":
        lines = data["parallel_lines"]
        vp_u_h = estimate_vanishing_point(lines["u"])
        vp_v_h = estimate_vanishing_point(lines["v"])
        if is_at_infinity(vp_u_h) or is_at_infinity(vp_v_h):
            raise CalibrationError(
                "parallel-line groups yield a vanishing point at infinity"
            )
        vp_u, vp_v = dehomogenize(vp_u_h), dehomogenize(vp_v_h)
    else:
        if "vp_v" not in data:
            raise CalibrationError("vp_u form requires vp_v")
        vp_u = np.asarray(data["vp_u"], dtype=float)
        vp_v = np.asarray(data["vp_v"], dtype=float)

    if scale_segment is None and camera_height_m is None:
        raise CalibrationError(
            "vanishing-point calibration requires scale_segment or camera_height_m"
        )
    return camera_from_vanishing_points(
        vp_u, vp_v, image_size,
        scale_segment=scale_segment, camera_height_m=camera_height_m,
    )
