"""Ground-plane geometry: footprint quadrangles, ground velocity, and the
3D bounding box built from contour tangent lines.

The 3D box construction works entirely in the image: three vanishing points
are derived from the vehicle's ground motion direction (along, across, and
vertical), the two tangent lines of the contour through each vanishing point
are found by extremal signed angle, and box corners are intersections of
those tangents.  The four bottom corners reprojected to the ground form the
footprint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import (
    AT_INFINITY_W,
    CameraModel,
    is_at_infinity,
    reproject_image_to_ground,
    reproject_points_to_ground,
    vanishing_point_of_ground_direction,
)
from .errors import DegenerateGeometryError, GroundTrackError
from .smoothing import SmoothedTrackPoint

DEFAULT_VEHICLE_WIDTH_M = 1.8

# Ground speed below which the motion direction is considered noise and the
# previous orientation is reused.
DEFAULT_V_ORIENT_MIN = 0.3


@dataclass(frozen=True, eq=False)
class Quadrangle:
    """Convex ground-plane quadrangle, vertices counterclockwise, meters."""

    vertices: np.ndarray  # (4, 2)

    @staticmethod
    def from_vertices(vertices) -> "Quadrangle":
        """Validate and normalize four boundary-ordered vertices to CCW."""
        arr = np.asarray(vertices, dtype=float).reshape(4, 2).copy()
        area2 = _signed_area2(arr)
        scale = max(float(np.abs(arr).max()), 1.0)
        if abs(area2) < 1e-12 * scale**2:
            raise DegenerateGeometryError("quadrangle has (near) zero area")
        if area2 < 0:
            arr = arr[::-1].copy()
        crosses = _edge_crosses(arr)
        if np.any(crosses < -1e-9 * scale**2):
            raise DegenerateGeometryError("quadrangle is not convex")
        arr.setflags(write=False)
        return Quadrangle(arr)

    @property
    def area(self) -> float:
        return 0.5 * _signed_area2(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @property
    def radius(self) -> float:
        """Largest vertex distance from the centroid."""
        return float(np.linalg.norm(self.vertices - self.centroid, axis=1).max())

    @property
    def diameter(self) -> float:
        """Largest vertex-to-vertex distance."""
        diffs = self.vertices[:, np.newaxis, :] - self.vertices[np.newaxis, :, :]
        return float(np.linalg.norm(diffs, axis=2).max())

    def translated(self, offset) -> "Quadrangle":
        moved = self.vertices + np.asarray(offset, dtype=float)
        moved.setflags(write=False)
        return Quadrangle(moved)

    def edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % 4]) for i in range(4)]

    def contains_point(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        v = self.vertices
        for i in range(4):
            edge = v[(i + 1) % 4] - v[i]
            if _cross2(edge, p - v[i]) < 0:
                return False
        return True


def _cross2(a, b):
    """z-component of the 2D cross product (scalar or per-row)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _signed_area2(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _edge_crosses(poly: np.ndarray) -> np.ndarray:
    edges = np.roll(poly, -1, axis=0) - poly
    nxt = np.roll(edges, -1, axis=0)
    return _cross2(edges, nxt)


@dataclass(eq=False)
class GroundObservation:
    """Per-frame 3D state of one vehicle on the ground plane."""

    frame_index: int
    time_s: float
    position: np.ndarray        # (2,) meters; reprojected bottom-middle point
    ground_velocity: np.ndarray  # (2,) m/s
    footprint: Quadrangle
    orientation_valid: bool
    footprint_fallback: bool = False


@dataclass(eq=False)
class Box3D:
    """Output of the tangent-line box construction."""

    footprint: Quadrangle
    image_corners: np.ndarray | None  # (8, 2): bottom 4 then top 4, or None
    fallback: bool


# ---------------------------------------------------------------------------
# Ground velocity
# ---------------------------------------------------------------------------

def ground_velocity(
    camera: CameraModel, point_px, image_velocity_px_s, frame_interval_s: float
) -> np.ndarray:
    """Project an image-space velocity onto the ground plane (m/s).

    Uses a one-frame forward difference through the ground reprojection; a
    zero image velocity maps to exactly zero.
    """
    v = np.asarray(image_velocity_px_s, dtype=float)
    if not v.any():
        return np.zeros(2)
    p = np.asarray(point_px, dtype=float)
    g0 = reproject_image_to_ground(camera, p)
    g1 = reproject_image_to_ground(camera, p + v * frame_interval_s)
    return (g1 - g0) / frame_interval_s


def ground_velocities(
    camera: CameraModel,
    points_px: np.ndarray,
    image_velocities_px_s: np.ndarray,
    frame_interval_s: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch version of ground_velocity: returns ((n, 2) m/s, ok mask)."""
    pts = np.asarray(points_px, dtype=float)
    vels = np.asarray(image_velocities_px_s, dtype=float)
    g0, ok0 = reproject_points_to_ground(camera, pts)
    g1, ok1 = reproject_points_to_ground(camera, pts + vels * frame_interval_s)
    out = (g1 - g0) / frame_interval_s
    still = ~vels.any(axis=1)
    out[still] = 0.0
    ok = (ok0 & ok1) | (still & ok0)
    out[~ok] = np.nan
    return out, ok


# ---------------------------------------------------------------------------
# Contour tangents
# ---------------------------------------------------------------------------

def convex_hull(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull vertices counterclockwise
    (in image axes; y grows downward, so 'counterclockwise' is algebraic)."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) < 3:
        raise DegenerateGeometryError("hull needs at least three distinct points")
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(iterable):
        chain = []
        for p in iterable:
            while len(chain) >= 2 and _cross2(chain[-1] - chain[-2], p - chain[-2]) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:
        raise DegenerateGeometryError("contour is degenerate (collinear points)")
    return hull


def _wrap_pi(angle: np.ndarray) -> np.ndarray:
    return (angle + np.pi) % (2.0 * np.pi) - np.pi


def _point_in_hull(point: np.ndarray, hull: np.ndarray) -> bool:
    sign = None
    n = len(hull)
    for i in range(n):
        edge = hull[(i + 1) % n] - hull[i]
        c = _cross2(edge, point - hull[i])
        if abs(c) < 1e-12:
            continue
        if sign is None:
            sign = c > 0
        elif (c > 0) != sign:
            return False
    return True


def tangent_lines_to_hull(vp_h: np.ndarray, hull: np.ndarray):
    """Two tangent lines of a convex hull through a (homogeneous) point.

    Returns [(line, touch_vertex), (line, touch_vertex)] with lines as
    homogeneous 3-vectors.  For a finite point the tangents are the extremal
    signed angles of hull vertices about it (ties broken by smaller vertex
    index); for a point at infinity they are the two supporting lines along
    its direction.  Raises DegenerateGeometryError if a finite point lies
    inside the hull.
    """
    vp_h = np.asarray(vp_h, dtype=float)
    if is_at_infinity(vp_h):
        d = vp_h[:2] / np.linalg.norm(vp_h[:2])
        axis = np.array([-d[1], d[0]])
        s = hull @ axis
        picks = [int(np.argmin(s)), int(np.argmax(s))]
        return [
            (np.cross(np.append(hull[i], 1.0), np.array([d[0], d[1], 0.0])), hull[i])
            for i in picks
        ]

    q = vp_h[:2] / vp_h[2]
    if _point_in_hull(q, hull):
        raise DegenerateGeometryError("vanishing point lies inside the contour hull")
    rel = hull - q
    ref = hull.mean(axis=0) - q
    base = np.arctan2(ref[1], ref[0])
    deltas = _wrap_pi(np.arctan2(rel[:, 1], rel[:, 0]) - base)
    picks = [int(np.argmin(deltas)), int(np.argmax(deltas))]
    q_h = np.array([q[0], q[1], 1.0])
    return [(np.cross(q_h, np.append(hull[i], 1.0)), hull[i]) for i in picks]


def _intersect(l1: np.ndarray, l2: np.ndarray) -> np.ndarray:
    p = np.cross(l1, l2)
    norm = np.linalg.norm(p)
    if norm < 1e-15 or abs(p[2]) < AT_INFINITY_W * norm:
        raise DegenerateGeometryError("lines are parallel")
    return p[:2] / p[2]


def _line_toward(point: np.ndarray, vp_h: np.ndarray) -> np.ndarray:
    return np.cross(np.append(point, 1.0), np.asarray(vp_h, dtype=float))


def _ground_side(camera: CameraModel, tangents) -> tuple:
    """Of two tangents, the one whose touch point lands nearest the camera on
    the ground.  A touch point on the vehicle's roof back-projects to a
    ground point beyond the one under the wheels, so the near tangent is the
    ground-side (bottom-face) one."""
    cam_xy = camera.center_m[:2]
    dists = []
    for _, touch in tangents:
        g = reproject_image_to_ground(camera, touch)
        dists.append(np.linalg.norm(g - cam_xy))
    order = int(np.argmin(dists))
    return tangents[order], tangents[1 - order]


def _point_to_hull_distance(point: np.ndarray, hull: np.ndarray) -> float:
    n = len(hull)
    best = np.inf
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        ab = b - a
        tt = np.clip(np.dot(point - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(point - (a + tt * ab))))
    return best


def axis_aligned_fallback_footprint(
    camera: CameraModel, left_px, right_px, width_m: float
) -> Quadrangle:
    """Footprint from a box bottom edge swept away from the camera.

    The bottom edge endpoints are reprojected to the ground and the resulting
    segment is extruded by ``width_m`` perpendicular to itself, on the side
    facing away from the camera.
    """
    g1 = reproject_image_to_ground(camera, np.asarray(left_px, dtype=float))
    g2 = reproject_image_to_ground(camera, np.asarray(right_px, dtype=float))
    edge = g2 - g1
    norm = np.linalg.norm(edge)
    if norm < 1e-9:
        raise DegenerateGeometryError("bottom edge reprojects to a single point")
    normal = np.array([-edge[1], edge[0]]) / norm
    mid = (g1 + g2) / 2.0
    if np.dot(normal, mid - camera.center_m[:2]) < 0:
        normal = -normal
    return Quadrangle.from_vertices([g1, g2, g2 + width_m * normal, g1 + width_m * normal])


def build_3d_bbox(
    camera: CameraModel,
    contour: np.ndarray,
    motion_dir,
    default_width_m: float = DEFAULT_VEHICLE_WIDTH_M,
) -> Box3D:
    """Build a vehicle 3D box from its contour and ground motion direction.

    Tangent pairs are taken through the motion vanishing point, the
    perpendicular ground vanishing point, and the vertical vanishing point.
    Corner recovery (bottom face): the near-ground tangents from the motion
    and cross directions intersect at one corner; each of them meets one of
    the two vertical tangents at a neighbor corner; the last corner is closed
    through the vanishing points.  Reversing the motion direction leaves the
    construction unchanged (vanishing points are projective).

    When the construction is ill-conditioned (vanishing point inside the
    hull, parallel tangents, reprojection failures, non-convex result) the
    axis-aligned fallback footprint is returned with ``fallback=True``.
    """
    contour = np.asarray(contour, dtype=float)
    if contour.ndim != 2 or contour.shape[1] != 2 or len(contour) < 3:
        raise DegenerateGeometryError("contour must be an (n>=3, 2) array")
    hull = convex_hull(contour)

    d = np.asarray(motion_dir, dtype=float).reshape(2)
    d = d / np.linalg.norm(d)
    cross_dir = np.array([-d[1], d[0]])

    def fallback() -> Box3D:
        left = np.array([hull[:, 0].min(), hull[:, 1].max()])
        right = np.array([hull[:, 0].max(), hull[:, 1].max()])
        quad = axis_aligned_fallback_footprint(camera, left, right, default_width_m)
        return Box3D(footprint=quad, image_corners=None, fallback=True)

    try:
        vp_u = vanishing_point_of_ground_direction(camera, d)
        vp_v = vanishing_point_of_ground_direction(camera, cross_dir)
        vp_w = camera.vp_w

        tan_u = tangent_lines_to_hull(vp_u, hull)
        tan_v = tangent_lines_to_hull(vp_v, hull)
        tan_w = tangent_lines_to_hull(vp_w, hull)

        (u_low, _), (u_up, _) = _ground_side(camera, tan_u)
        (v_low, _), (v_up, _) = _ground_side(camera, tan_v)
        (w_a, _), (w_b, _) = tan_w

        c0 = _intersect(u_low, v_low)

        # The two vertical tangents each pair with one of the ground-side
        # tangents; the correct pairing puts both corners on the silhouette.
        def corner_pair(wx, wy):
            c1 = _intersect(u_low, wx)
            c2 = _intersect(v_low, wy)
            cost = _point_to_hull_distance(c1, hull) + _point_to_hull_distance(c2, hull)
            return c1, c2, cost

        c1a, c2a, cost_a = corner_pair(w_a, w_b)
        c1b, c2b, cost_b = corner_pair(w_b, w_a)
        if cost_a <= cost_b:
            c1, c2, w_with_u, w_with_v = c1a, c2a, w_a, w_b
        else:
            c1, c2, w_with_u, w_with_v = c1b, c2b, w_b, w_a
        c3 = _intersect(_line_toward(c1, vp_v), _line_toward(c2, vp_u))

        bottom = np.array([c1, c0, c2, c3])
        ground, ok = reproject_points_to_ground(camera, bottom)
        if not ok.all():
            return fallback()
        # Boundary order: c1 and c2 are both neighbors of c0, c3 closes it.
        footprint = Quadrangle.from_vertices([ground[0], ground[1], ground[2], ground[3]])

        corners = np.full((8, 2), np.nan)
        corners[:4] = bottom
        try:
            d0 = _intersect(u_up, v_up)
            t_rr = _intersect(u_up, w_with_v)
            t_fl = _intersect(v_up, w_with_u)
            t_rl = _intersect(_line_toward(t_fl, vp_u), _line_toward(t_rr, vp_v))
            corners[4:] = [t_fl, d0, t_rr, t_rl]
        except DegenerateGeometryError:
            corners = None
        return Box3D(footprint=footprint, image_corners=corners, fallback=False)
    except (GroundTrackError, np.linalg.LinAlgError):
        return fallback()


# ---------------------------------------------------------------------------
# Observation assembly
# ---------------------------------------------------------------------------

def make_observation(
    camera: CameraModel,
    smoothed: SmoothedTrackPoint,
    contour: np.ndarray | None,
    prev_orientation: np.ndarray | None,
    fps: float,
    v_orient_min: float = DEFAULT_V_ORIENT_MIN,
    default_width_m: float = DEFAULT_VEHICLE_WIDTH_M,
) -> GroundObservation:
    """Assemble the ground-plane state of one smoothed track frame.

    Below ``v_orient_min`` the motion direction is unreliable, so the
    previous orientation is reused (orientation_valid=False); a stopped
    vehicle with no history at all falls back to the axis-aligned footprint.
    """
    position = reproject_image_to_ground(camera, smoothed.bottom_middle)
    gv = ground_velocity(
        camera, smoothed.bottom_middle, smoothed.image_velocity, 1.0 / fps
    )
    speed = float(np.linalg.norm(gv))
    orientation_valid = speed >= v_orient_min
    if orientation_valid:
        motion_dir = gv / speed
    else:
        motion_dir = prev_orientation

    fallback = False
    if contour is not None and motion_dir is not None:
        box = build_3d_bbox(camera, contour, motion_dir, default_width_m)
        footprint = box.footprint
        fallback = box.fallback
    else:
        cx, cy = smoothed.bottom_middle
        half_w = smoothed.box_size[0] / 2.0
        footprint = axis_aligned_fallback_footprint(
            camera, (cx - half_w, cy), (cx + half_w, cy), default_width_m
        )
        fallback = contour is not None  # no-contour path is the documented default

    return GroundObservation(
        frame_index=smoothed.frame_index,
        time_s=0.0 if fps <= 0 else smoothed.frame_index / fps,
        position=position,
        ground_velocity=gv,
        footprint=footprint,
        orientation_valid=orientation_valid,
        footprint_fallback=fallback,
    )
