"""Per-building effective field-of-view from footprints, with occlusion checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, FullyOccludedError
from .footprints import Footprint2D, _point_to_ring_distance, _segments_intersect


@dataclass(frozen=True)
class FovWindow:
    left: float           # bearing, degrees CW from north, in [0, 360)
    right: float          # bearing, degrees CW from north, in [0, 360)
    optimal_pitch: float  # degrees

    @property
    def width(self) -> float:
        return (self.right - self.left) % 360.0


def bearing(from_xy, to_xy) -> float:
    """Bearing in degrees clockwise from north (+y), range [0, 360)."""
    dx = to_xy[0] - from_xy[0]
    dy = to_xy[1] - from_xy[1]
    if dx == 0.0 and dy == 0.0:
        raise ArgumentError("bearing of coincident points is undefined")
    return math.degrees(math.atan2(dx, dy)) % 360.0


def densify_ring(ring: np.ndarray, spacing: float) -> np.ndarray:
    """Boundary samples at most `spacing` apart, original vertices included."""
    samples = []
    n = len(ring)
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        length = float(np.hypot(*(b - a)))
        steps = max(1, int(math.ceil(length / spacing)))
        for k in range(steps):
            samples.append(a + (k / steps) * (b - a))
    return np.asarray(samples)


def _segment_occluded(camera, sample, neighbors: list[Footprint2D]) -> bool:
    for fp in neighbors:
        ring = fp.ring
        n = len(ring)
        for i in range(n):
            if _segments_intersect(camera, sample, ring[i], ring[(i + 1) % n]):
                return True
        midpoint = 0.5 * (np.asarray(camera) + np.asarray(sample))
        if _point_to_ring_distance(midpoint, ring) == 0.0:
            return True
    return False


def effective_fov(camera_xy, target: Footprint2D, neighbors: list[Footprint2D],
                  spacing: float = 0.5, wall_mid_height: float | None = None,
                  camera_height: float = 1.7) -> FovWindow:
    """Angular window over which the target boundary is visible past the neighbors.

    The boundary is sampled at <= `spacing` meters; a sample survives when the
    camera-to-sample segment crosses no neighbor footprint. The window is the
    circular-arc-aware min/max of surviving bearings. optimal_pitch is the
    elevation of the facade mid-height seen from the camera (0 when no height
    information is supplied).
    """
    camera_xy = np.asarray(camera_xy, dtype=np.float64)
    centroid = target.centroid
    if _point_to_ring_distance(camera_xy, target.ring) == 0.0:
        raise ArgumentError("camera lies inside the target footprint")

    center_bearing = bearing(camera_xy, centroid)
    samples = densify_ring(target.ring, spacing)

    relative = []
    for sample in samples:
        if np.allclose(sample, camera_xy):
            continue
        if _segment_occluded(camera_xy, sample, neighbors):
            continue
        b = bearing(camera_xy, sample)
        rel = (b - center_bearing + 180.0) % 360.0 - 180.0
        relative.append(rel)

    if not relative:
        raise FullyOccludedError("every boundary sample is occluded")

    left = (center_bearing + min(relative)) % 360.0
    right = (center_bearing + max(relative)) % 360.0

    if wall_mid_height is None:
        pitch = 0.0
    else:
        distance = float(np.hypot(*(centroid - camera_xy)))
        pitch = math.degrees(math.atan2(wall_mid_height - camera_height, distance))
    return FovWindow(left=left, right=right, optimal_pitch=pitch)


def sample_horizontal_angles(window: FovWindow, n: int = 10,
                             inward_fraction: float = 0.05) -> list[float]:
    """n bearings across the window, pulled in by width * inward_fraction per side."""
    if n < 2:
        raise ArgumentError(f"need n >= 2 horizontal samples, got {n}")
    width = window.width
    offset = width * inward_fraction
    start = window.left + offset
    span = width - 2.0 * offset
    return [(start + i * span / (n - 1)) % 360.0 for i in range(n)]


def sample_pitches(optimal_pitch: float, k: int = 5, pitch_range: float = 5.0) -> list[float]:
    """k pitches evenly spread over [optimal - range, optimal + range]."""
    if k < 1:
        raise ArgumentError(f"need k >= 1 pitch samples, got {k}")
    if k == 1:
        return [optimal_pitch]
    lo = optimal_pitch - pitch_range
    return [lo + i * (2.0 * pitch_range) / (k - 1) for i in range(k)]


def write_fov_csv(rows: list[tuple], path) -> None:
    """Rows of (building_id, pano_id, window)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("building_id,pano_id,left_deg,right_deg,pitch_deg\n")
        for building_id, pano_id, window in rows:
            fh.write(f"{building_id},{pano_id},{window.left!r},{window.right!r},"
                     f"{window.optimal_pitch!r}\n")
