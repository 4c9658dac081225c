"""2D building footprints: GeoJSON export, sampling points, buffer queries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, CrsError, GeometryError
from .geodesy import METERS_PER_DEGREE, GeodeticPoint

GEODETIC_CRS = "EPSG:4326"


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


def is_simple_ring(ring: np.ndarray) -> bool:
    """True when no two non-adjacent edges of the closed ring cross."""
    n = len(ring)
    for i in range(n):
        a1, a2 = ring[i], ring[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = ring[j], ring[(j + 1) % n]
            if _segments_intersect(a1, a2, b1, b2):
                return False
    return True


def signed_area(ring: np.ndarray) -> float:
    x = ring[:, 0]
    y = ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass
class Footprint2D:
    ring: np.ndarray  # (n, 2), closure implied (first vertex not repeated)
    crs: str
    building_id: str = ""

    def __post_init__(self):
        self.ring = np.asarray(self.ring, dtype=np.float64)
        if len(self.ring) < 3:
            raise GeometryError(f"footprint {self.building_id!r} has fewer than 3 vertices")
        if not is_simple_ring(self.ring):
            raise GeometryError(f"footprint {self.building_id!r} is self-intersecting")

    @property
    def centroid(self) -> np.ndarray:
        return self.ring.mean(axis=0)


def to_geojson(footprints: list[Footprint2D]) -> dict:
    """RFC 7946 FeatureCollection with counter-clockwise closed [lon, lat] rings."""
    features = []
    for fp in footprints:
        if fp.crs != GEODETIC_CRS:
            raise CrsError(f"footprint {fp.building_id!r} is in {fp.crs}, expected {GEODETIC_CRS}")
        ring = fp.ring
        if signed_area(ring) < 0:
            ring = ring[::-1]
        coords = [[float(x), float(y)] for x, y in ring]
        coords.append(coords[0])
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon", "coordinates": [coords]},
            "properties": {"building_id": fp.building_id},
        })
    return {"type": "FeatureCollection", "features": features}


def write_geojson(footprints: list[Footprint2D], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_geojson(footprints), fh, indent=2, sort_keys=True)
        fh.write("\n")


def generate_sampling_points(start: GeodeticPoint, end: GeodeticPoint, n: int) -> list[GeodeticPoint]:
    """n points linearly interpolated in lat/lon, endpoints included."""
    if n < 2:
        raise ArgumentError(f"need at least 2 sampling points, got {n}")
    points = []
    for i in range(n):
        t = i / (n - 1)
        points.append(GeodeticPoint(
            lat=start.lat + t * (end.lat - start.lat),
            lon=start.lon + t * (end.lon - start.lon),
        ))
    return points


def write_sampling_csv(points: list[GeodeticPoint], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("point_id,lat,lon\n")
        for i, p in enumerate(points):
            fh.write(f"{i},{p.lat!r},{p.lon!r}\n")


def _point_to_ring_distance(point: np.ndarray, ring: np.ndarray) -> float:
    """Distance from a 2D point to a polygon (0 when inside)."""
    # inside test by ray crossing
    x, y = point
    inside = False
    n = len(ring)
    for i in range(n):
        x1, y1 = ring[i]
        x2, y2 = ring[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x < x_cross:
                inside = not inside
    if inside:
        return 0.0
    best = math.inf
    for i in range(n):
        a = ring[i]
        b = ring[(i + 1) % n]
        ab = b - a
        denom = float(ab @ ab)
        t = 0.0 if denom == 0 else float(np.clip((point - a) @ ab / denom, 0.0, 1.0))
        closest = a + t * ab
        best = min(best, float(np.hypot(*(point - closest))))
    return best


def buffer_filter(point: GeodeticPoint, radius_m: float,
                  footprints: list[Footprint2D]) -> list[str]:
    """IDs of footprints within radius_m of the point (local tangent-plane metric)."""
    if radius_m <= 0:
        raise ArgumentError(f"radius must be positive, got {radius_m}")
    cos_lat = math.cos(math.radians(point.lat))
    origin = np.array([point.lon, point.lat])
    ids = []
    for fp in footprints:
        if fp.crs != GEODETIC_CRS:
            raise CrsError(f"footprint {fp.building_id!r} is in {fp.crs}, expected {GEODETIC_CRS}")
        local = (fp.ring - origin) * np.array([METERS_PER_DEGREE * cos_lat, METERS_PER_DEGREE])
        if _point_to_ring_distance(np.zeros(2), local) <= radius_m:
            ids.append(fp.building_id)
    return ids
