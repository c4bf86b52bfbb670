"""Footprint-based collision detection.

Vehicle footprints are convex ground-plane quadrangles.  For every pair in a
frame, footprints are swept forward under a fixed-speed model and checked for
overlap; the first overlapping prediction time raises an alert.  The
quadrangle distance itself (minimum vertex-to-edge distance, zero under
overlap) is exposed both for pruning and as a diagnostic series.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geometry import GroundObservation, Quadrangle

DEFAULT_HORIZON_S = 1.0
DEFAULT_STEP_S = 0.1


@dataclass(frozen=True)
class CollisionAlert:
    """Predicted footprint overlap between two tracks.

    ``horizon_s`` is the earliest prediction offset at which the footprints
    overlap; ``min_distance_now`` the current quadrangle distance.
    """

    t_s: float
    track_a: int
    track_b: int
    horizon_s: float
    min_distance_now: float

    def __post_init__(self):
        if self.track_a == self.track_b:
            raise ValueError("collision requires two distinct tracks")
        if self.horizon_s < 0:
            raise ValueError("horizon must be nonnegative")


def point_edge_distance(point, edge_a, edge_b) -> float:
    """Euclidean distance from a point to a closed segment."""
    p = np.asarray(point, dtype=float)
    a = np.asarray(edge_a, dtype=float)
    b = np.asarray(edge_b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-24:
        raise ValueError("segment endpoints coincide")
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def quadrangles_overlap(q1: Quadrangle, q2: Quadrangle) -> bool:
    """Separating-axis test over the 8 edge normals; touching counts."""
    for quad in (q1, q2):
        verts = quad.vertices
        edges = np.roll(verts, -1, axis=0) - verts
        normals = np.column_stack([-edges[:, 1], edges[:, 0]])
        proj1 = q1.vertices @ normals.T
        proj2 = q2.vertices @ normals.T
        if np.any(proj1.max(axis=0) < proj2.min(axis=0)) or np.any(
            proj2.max(axis=0) < proj1.min(axis=0)
        ):
            return False
    return True


def quadrangle_distance(q1: Quadrangle, q2: Quadrangle) -> float:
    """Minimum distance between two convex quadrangles (0 when overlapping).

    For disjoint quadrangles this is the minimum over the vertices of each
    against the edges of the other.
    """
    if quadrangles_overlap(q1, q2):
        return 0.0
    best = np.inf
    for pts, quad in ((q1.vertices, q2), (q2.vertices, q1)):
        for p in pts:
            for a, b in quad.edges():
                best = min(best, point_edge_distance(p, a, b))
    return float(best)


def predict_center(position, velocity, dt: float) -> np.ndarray:
    """Fixed-speed position prediction."""
    if dt < 0:
        raise ValueError("prediction offset must be nonnegative")
    return np.asarray(position, dtype=float) + np.asarray(velocity, dtype=float) * dt


def predict_quadrangle(quad: Quadrangle, velocity, dt: float) -> Quadrangle:
    """Rigidly translate a footprint under the fixed-speed model."""
    if dt < 0:
        raise ValueError("prediction offset must be nonnegative")
    return quad.translated(np.asarray(velocity, dtype=float) * dt)


def first_overlap_offset(
    a: GroundObservation, b: GroundObservation, horizon_s: float, step_s: float
) -> float | None:
    """Smallest sweep offset t' in [0, horizon] with overlapping predictions."""
    offsets = np.arange(0.0, horizon_s + 0.5 * step_s, step_s)
    for dt in offsets:
        qa = predict_quadrangle(a.footprint, a.ground_velocity, float(dt))
        qb = predict_quadrangle(b.footprint, b.ground_velocity, float(dt))
        if quadrangles_overlap(qa, qb):
            return float(dt)
    return None


def detect_collisions(
    observations: list[GroundObservation],
    horizon_s: float = DEFAULT_HORIZON_S,
    step_s: float = DEFAULT_STEP_S,
    track_ids: list[int] | None = None,
) -> list[CollisionAlert]:
    """Check all vehicle pairs of one frame for predicted footprint overlap.

    ``track_ids`` gives the track id of each observation (defaults to its
    list index).  Pairs whose centroids are farther apart than the distance
    both could close within the horizon plus both footprint diameters are
    pruned without running the sweep; the pruning bound is conservative, so
    no alerting pair is ever dropped.
    """
    if horizon_s <= 0:
        raise ValueError("horizon must be positive")
    if step_s <= 0:
        raise ValueError("sweep step must be positive")
    if track_ids is None:
        track_ids = list(range(len(observations)))
    alerts = []
    for i, j in combinations(range(len(observations)), 2):
        a, b = observations[i], observations[j]
        gap = float(np.linalg.norm(a.footprint.centroid - b.footprint.centroid))
        speed_sum = float(
            np.linalg.norm(a.ground_velocity) + np.linalg.norm(b.ground_velocity)
        )
        if gap > horizon_s * speed_sum + a.footprint.diameter + b.footprint.diameter:
            continue
        offset = first_overlap_offset(a, b, horizon_s, step_s)
        if offset is None:
            continue
        ta, tb = track_ids[i], track_ids[j]
        if ta > tb:
            ta, tb = tb, ta
        alerts.append(
            CollisionAlert(
                t_s=a.time_s,
                track_a=ta,
                track_b=tb,
                horizon_s=offset,
                min_distance_now=quadrangle_distance(a.footprint, b.footprint),
            )
        )
    alerts.sort(key=lambda al: (al.track_a, al.track_b))
    return alerts


class CollisionMonitor:
    """Per-episode deduplication of collision alerts across frames.

    A pair alerts once per contiguous overlap episode; it may alert again
    only after a frame whose sweep finds no predicted overlap for that pair.
    """

    def __init__(self, horizon_s: float = DEFAULT_HORIZON_S, step_s: float = DEFAULT_STEP_S):
        self.horizon_s = horizon_s
        self.step_s = step_s
        self._active: set[tuple[int, int]] = set()

    def update(
        self, observations: list[GroundObservation], track_ids: list[int]
    ) -> list[CollisionAlert]:
        frame_alerts = detect_collisions(
            observations, self.horizon_s, self.step_s, track_ids
        )
        now_active = {(al.track_a, al.track_b) for al in frame_alerts}
        new = [al for al in frame_alerts if (al.track_a, al.track_b) not in self._active]
        self._active = now_active
        return new


def pairwise_distance_series(
    frames: list[tuple[float, list[GroundObservation], list[int]]]
) -> dict[tuple[int, int], list[tuple[float, float]]]:
    """Per-pair footprint distance over time, for diagnostics and plotting.

    ``frames`` is a list of (time_s, observations, track_ids).  A steadily
    shrinking series is the early indicator of a potential crash.
    """
    series: dict[tuple[int, int], list[tuple[float, float]]] = {}
    for time_s, observations, track_ids in frames:
        for i, j in combinations(range(len(observations)), 2):
            key = (min(track_ids[i], track_ids[j]), max(track_ids[i], track_ids[j]))
            d = quadrangle_distance(observations[i].footprint, observations[j].footprint)
            series.setdefault(key, []).append((time_s, d))
    return series
