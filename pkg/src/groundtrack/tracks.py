"""Per-frame 2D observations of tracked vehicles, as delivered by an upstream
detector/tracker.  Identity association has already happened: every record
carries a track id, and within one id the frame index strictly increases.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class VehicleClass(str, Enum):
    CAR = "car"
    BUS = "bus"
    TRUCK = "truck"


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _segments_properly_cross(a0, a1, b0, b1) -> bool:
    """True when the open segments a0-a1 and b0-b1 cross at an interior point."""
    d1 = _cross2(a1 - a0, b0 - a0)
    d2 = _cross2(a1 - a0, b1 - a0)
    d3 = _cross2(b1 - b0, a0 - b0)
    d4 = _cross2(b1 - b0, a1 - b0)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def polygon_is_simple(points: np.ndarray) -> bool:
    """Check that a closed polygon has no self-intersections.

    Only proper crossings between non-adjacent edges are rejected; shared
    endpoints of consecutive edges are fine.  O(n^2), intended for input
    validation of small contours.
    """
    n = len(points)
    if n < 3:
        return False
    edges = [(points[i], points[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue  # adjacent edges share a vertex
            if _segments_properly_cross(*edges[i], *edges[j]):
                return False
    return True


@dataclass(frozen=True, eq=False)
class TrackPoint:
    """One detection of one tracked vehicle in image space.

    ``bbox`` is (left, top, width, height) in pixels.  ``contour``, when
    present, is an (n, 2) float array of pixel coordinates forming a simple
    closed polygon around the vehicle mask.
    """

    frame_index: int
    time_s: float
    track_id: int
    class_label: VehicleClass
    confidence: float
    bbox: tuple[float, float, float, float]
    contour: np.ndarray | None = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError(f"frame_index must be >= 0, got {self.frame_index}")
        left, top, width, height = self.bbox
        if width <= 0 or height <= 0:
            raise ValueError(f"bbox must have positive size, got {self.bbox}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.contour is not None:
            contour = np.asarray(self.contour, dtype=float)
            if contour.ndim != 2 or contour.shape[1] != 2 or len(contour) < 3:
                raise ValueError("contour must be an (n>=3, 2) array")
            if not polygon_is_simple(contour):
                raise ValueError("contour must be a simple (non-self-intersecting) polygon")
            contour.setflags(write=False)
            object.__setattr__(self, "contour", contour)

    @property
    def bottom_middle(self) -> np.ndarray:
        """Bottom-middle point of the 2D box, the vehicle's ground contact proxy."""
        left, top, width, height = self.bbox
        return np.array([left + width / 2.0, top + height])
