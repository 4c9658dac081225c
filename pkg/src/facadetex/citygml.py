"""CityGML subset parser producing triangulated B-Rep building records.

Reads bldg:Building elements with WallSurface / GroundSurface / RoofSurface
boundaries and Window / Door openings; everything else is ignored (counted
as a warning). Polygons come from the exterior-ring gml:posList; polygons
with more than three vertices are fan-triangulated, with ear clipping as
the non-convex fallback.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import GeometryError, MissingSurfaceError, ParseError
from .footprints import Footprint2D

log = logging.getLogger(__name__)

DEFAULT_CRS = "EPSG:25832"

_SURFACE_TAGS = {
    "WallSurface": "wall",
    "GroundSurface": "ground",
    "RoofSurface": "roof",
}
_OPENING_TAGS = {"Window": "window", "Door": "door"}


class FaceClass(Enum):
    WALL = "WallSurface"
    GROUND = "GroundSurface"
    ROOF = "RoofSurface"
    OPENING_WINDOW = "OpeningWindow"
    OPENING_DOOR = "OpeningDoor"
    OTHER = "Other"


@dataclass
class OpeningPolygon:
    ring: np.ndarray  # (n, 3)
    kind: str         # "window" | "door"


@dataclass
class WallPolygon:
    ring: np.ndarray  # (n, 3)
    openings: list[OpeningPolygon] = field(default_factory=list)


@dataclass
class BRepBuilding:
    id: str
    vertices: np.ndarray          # (n, 3) float64
    faces: np.ndarray             # (m, 3) int, indices into vertices
    face_class: list[FaceClass]   # one entry per face
    crs: str
    walls: list[WallPolygon]
    ground_rings: list[np.ndarray]  # source order

    @property
    def z_min(self) -> float:
        return float(self.vertices[:, 2].min())

    @property
    def z_max(self) -> float:
        return float(self.vertices[:, 2].max())

    @property
    def height(self) -> float:
        return self.z_max - self.z_min


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(l) + 1 for l in lines[: line - 1]) + column


def _parse_pos_list(text: str, owner_id: str) -> np.ndarray:
    values = text.split()
    if len(values) % 3 != 0:
        raise GeometryError(
            f"posList of building {owner_id!r} has {len(values)} coordinates, not divisible by 3"
        )
    coords = np.asarray([float(v) for v in values], dtype=np.float64).reshape(-1, 3)
    # drop the explicit closing vertex if present
    if len(coords) > 1 and np.allclose(coords[0], coords[-1]):
        coords = coords[:-1]
    return coords


def _polygon_rings(element: ET.Element, owner_id: str) -> list[np.ndarray]:
    """Exterior rings of every gml:Polygon below element, document order."""
    rings = []
    for poly in element.iter():
        if _local(poly.tag) != "Polygon":
            continue
        exterior = None
        for child in poly.iter():
            if _local(child.tag) == "exterior":
                exterior = child
                break
        search_root = exterior if exterior is not None else poly
        for pos in search_root.iter():
            if _local(pos.tag) == "posList" and pos.text:
                ring = _parse_pos_list(pos.text, owner_id)
                if len(ring) >= 3:
                    rings.append(ring)
                else:
                    log.warning("degenerate ring (<3 vertices) in %s skipped", owner_id)
                break  # first posList per polygon
    return rings


def _newell_normal(ring: np.ndarray) -> np.ndarray:
    normal = np.zeros(3)
    for i in range(len(ring)):
        a = ring[i]
        b = ring[(i + 1) % len(ring)]
        normal[0] += (a[1] - b[1]) * (a[2] + b[2])
        normal[1] += (a[2] - b[2]) * (a[0] + b[0])
        normal[2] += (a[0] - b[0]) * (a[1] + b[1])
    norm = np.linalg.norm(normal)
    if norm < 1e-12:
        return np.array([0.0, 0.0, 1.0])
    return normal / norm


def _project_ring_2d(ring: np.ndarray) -> np.ndarray:
    n = _newell_normal(ring)
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    centered = ring - ring.mean(axis=0)
    return np.column_stack([centered @ u, centered @ v])


def _is_convex(ring2d: np.ndarray) -> bool:
    n = len(ring2d)
    sign = 0.0
    for i in range(n):
        a, b, c = ring2d[i], ring2d[(i + 1) % n], ring2d[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if abs(cross) < 1e-12:
            continue
        if sign == 0.0:
            sign = cross
        elif sign * cross < 0:
            return False
    return True


def _ear_clip(ring2d: np.ndarray) -> list[tuple[int, int, int]]:
    indices = list(range(len(ring2d)))
    # make the ring counter-clockwise so ear tests are consistent
    area2 = 0.0
    for i in range(len(ring2d)):
        a, b = ring2d[i], ring2d[(i + 1) % len(ring2d)]
        area2 += a[0] * b[1] - b[0] * a[1]
    if area2 < 0:
        indices.reverse()

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    def inside(p, a, b, c):
        d1 = cross(a, b, p)
        d2 = cross(b, c, p)
        d3 = cross(c, a, p)
        return d1 >= -1e-12 and d2 >= -1e-12 and d3 >= -1e-12

    triangles = []
    guard = 0
    while len(indices) > 3 and guard < 10000:
        guard += 1
        clipped = False
        for k in range(len(indices)):
            i0, i1, i2 = (indices[k - 1], indices[k], indices[(k + 1) % len(indices)])
            a, b, c = ring2d[i0], ring2d[i1], ring2d[i2]
            if cross(a, b, c) <= 1e-12:
                continue
            if any(inside(ring2d[j], a, b, c) for j in indices
                   if j not in (i0, i1, i2)):
                continue
            triangles.append((i0, i1, i2))
            indices.pop(k)
            clipped = True
            break
        if not clipped:
            break
    if len(indices) == 3:
        triangles.append(tuple(indices))
    return triangles


def triangulate_ring(ring: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangle index triples for a planar polygon ring (fan if convex)."""
    if len(ring) == 3:
        return [(0, 1, 2)]
    ring2d = _project_ring_2d(ring)
    if _is_convex(ring2d):
        return [(0, i, i + 1) for i in range(1, len(ring) - 1)]
    return _ear_clip(ring2d)


def _crs_from_root(root: ET.Element) -> str:
    for element in root.iter():
        srs = element.get("srsName")
        if srs:
            if "EPSG" in srs:
                code = srs.rstrip(":").rsplit(":", 1)[-1].rsplit("::", 1)[-1]
                if code.isdigit():
                    return f"EPSG:{code}"
            return srs
    return DEFAULT_CRS


class _MeshBuilder:
    """Accumulates polygons into a deduplicated vertex/face table."""

    def __init__(self):
        self.vertices: list[np.ndarray] = []
        self.index: dict[tuple, int] = {}
        self.faces: list[tuple[int, int, int]] = []
        self.face_class: list[FaceClass] = []

    def _vertex(self, p: np.ndarray) -> int:
        key = (round(p[0], 9), round(p[1], 9), round(p[2], 9))
        if key not in self.index:
            self.index[key] = len(self.vertices)
            self.vertices.append(np.asarray(p, dtype=np.float64))
        return self.index[key]

    def add_ring(self, ring: np.ndarray, cls: FaceClass):
        vertex_ids = [self._vertex(p) for p in ring]
        for i, j, k in triangulate_ring(ring):
            self.faces.append((vertex_ids[i], vertex_ids[j], vertex_ids[k]))
            self.face_class.append(cls)


def parse_citygml(document: bytes | str) -> list[BRepBuilding]:
    """Parse CityGML bytes into building records (one per bldg:Building)."""
    if isinstance(document, str):
        document = document.encode("utf-8")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(document, line, column)
        raise ParseError(f"malformed XML at byte {offset}: {exc}", offset=offset) from exc

    crs = _crs_from_root(root)
    buildings = []
    ignored_tags = 0

    for element in root.iter():
        if _local(element.tag) != "Building":
            continue
        gml_id = next((v for k, v in element.attrib.items() if _local(k) == "id"),
                      f"building-{len(buildings)}")

        mesh = _MeshBuilder()
        walls: list[WallPolygon] = []
        ground_rings: list[np.ndarray] = []

        def handle_surface(surface: ET.Element, kind: str):
            nonlocal ignored_tags
            if kind == "wall":
                wall = WallPolygon(ring=np.empty((0, 3)))
                # wall geometry lives outside bldg:opening children
                opening_nodes = [c for c in surface.iter() if _local(c.tag) in _OPENING_TAGS]

                opening_descendants = set()
                for node in opening_nodes:
                    opening_descendants.update(id(d) for d in node.iter())
                own_rings = []
                for poly in surface.iter():
                    if _local(poly.tag) == "Polygon" and id(poly) not in opening_descendants:
                        own_rings.extend(_polygon_rings(poly, gml_id))
                for ring in own_rings:
                    mesh.add_ring(ring, FaceClass.WALL)
                if own_rings:
                    wall.ring = own_rings[0]
                for node in opening_nodes:
                    op_kind = _OPENING_TAGS[_local(node.tag)]
                    cls = (FaceClass.OPENING_WINDOW if op_kind == "window"
                           else FaceClass.OPENING_DOOR)
                    for ring in _polygon_rings(node, gml_id):
                        mesh.add_ring(ring, cls)
                        wall.openings.append(OpeningPolygon(ring=ring, kind=op_kind))
                if own_rings:
                    walls.append(wall)
            elif kind == "ground":
                for ring in _polygon_rings(surface, gml_id):
                    mesh.add_ring(ring, FaceClass.GROUND)
                    ground_rings.append(ring)
            elif kind == "roof":
                for ring in _polygon_rings(surface, gml_id):
                    mesh.add_ring(ring, FaceClass.ROOF)

        for surface in element.iter():
            tag = _local(surface.tag)
            if tag in _SURFACE_TAGS:
                handle_surface(surface, _SURFACE_TAGS[tag])

        if not mesh.faces:
            log.warning("building %s has no supported surfaces, skipped", gml_id)
            continue

        buildings.append(BRepBuilding(
            id=gml_id,
            vertices=np.asarray(mesh.vertices),
            faces=np.asarray(mesh.faces, dtype=np.int64),
            face_class=mesh.face_class,
            crs=crs,
            walls=walls,
            ground_rings=ground_rings,
        ))

    return buildings


def extract_footprint(building: BRepBuilding) -> Footprint2D:
    """(x, y) ring of the first GroundSurface polygon in document order."""
    if not building.ground_rings:
        raise MissingSurfaceError(f"building {building.id!r} has no GroundSurface")
    ring = building.ground_rings[0][:, :2].copy()
    return Footprint2D(ring=ring, crs=building.crs, building_id=building.id)
