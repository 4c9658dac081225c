"""Mesh-side geometry: ray casting, PCA plane frames, facade simplification.

A fragmented facade (many small triangles) is reduced to a single
quadrilateral by fitting a plane to the hit faces, projecting their
vertices, taking the minimum-area bounding rectangle, and mapping the
four corners back to 3D. The quad re-triangulates along the q1-q3
diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateGeometryError,
    NonPlanarFacadeError,
    NoVisibleFacadeError,
)

_EPS = 1e-9


@dataclass(frozen=True)
class CameraPose:
    position: np.ndarray       # (3,) m, projected CRS
    heading: float             # degrees clockwise from north
    fov: float = 90.0          # degrees
    height: float = 1.7        # m above the building lower bound
    near_offset: float = 0.01  # m

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        if not 0.0 < self.fov < 180.0:
            raise ArgumentError(f"fov must be in (0, 180), got {self.fov}")
        if self.height <= 0.0:
            raise ArgumentError(f"camera height must be positive, got {self.height}")


@dataclass(frozen=True)
class PlaneFrame:
    c: np.ndarray  # centroid
    u: np.ndarray  # in-plane basis
    v: np.ndarray  # in-plane basis
    n: np.ndarray  # unit normal, u x v


@dataclass(frozen=True)
class RayHit:
    face_index: int
    t: float
    point: np.ndarray


@dataclass(frozen=True)
class Quad3D:
    corners: np.ndarray  # (4, 3), counter-clockwise seen from the +n side

    def __post_init__(self):
        object.__setattr__(self, "corners", np.asarray(self.corners, dtype=np.float64))

    @property
    def q1(self):
        return self.corners[0]

    @property
    def q2(self):
        return self.corners[1]

    @property
    def q3(self):
        return self.corners[2]

    @property
    def q4(self):
        return self.corners[3]

    def triangles(self) -> list[np.ndarray]:
        """Two triangles sharing the q1-q3 diagonal."""
        return [self.corners[[0, 1, 2]], self.corners[[0, 2, 3]]]


def _mesh_arrays(mesh) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(mesh, tuple):
        vertices, faces = mesh
    else:
        vertices, faces = mesh.vertices, mesh.faces
    return np.asarray(vertices, dtype=np.float64), np.asarray(faces, dtype=np.int64)


def ray_triangle_intersect(origin, direction, triangle) -> RayHit | None:
    """Moeller-Trumbore intersection; hits need t > 1e-9."""
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    tri = np.asarray(triangle, dtype=np.float64)

    e1 = tri[1] - tri[0]
    e2 = tri[2] - tri[0]
    pvec = np.cross(direction, e2)
    det = float(e1 @ pvec)
    if abs(det) < _EPS:
        return None
    inv_det = 1.0 / det
    tvec = origin - tri[0]
    u = float(tvec @ pvec) * inv_det
    if u < -_EPS or u > 1.0 + _EPS:
        return None
    qvec = np.cross(tvec, e1)
    v = float(direction @ qvec) * inv_det
    if v < -_EPS or u + v > 1.0 + _EPS:
        return None
    t = float(e2 @ qvec) * inv_det
    if t <= _EPS:
        return None
    return RayHit(face_index=-1, t=t, point=origin + t * direction)


def ray_mesh_hits(origin, direction, mesh) -> list[RayHit]:
    """All mesh faces hit by one ray, vectorized over faces."""
    vertices, faces = _mesh_arrays(mesh)
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)

    # AABB prefilter
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    if not _ray_hits_aabb(origin, direction, lo, hi):
        return []

    a = vertices[faces[:, 0]]
    e1 = vertices[faces[:, 1]] - a
    e2 = vertices[faces[:, 2]] - a
    pvec = np.cross(direction[None, :], e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) >= _EPS
    inv_det = np.zeros_like(det)
    inv_det[ok] = 1.0 / det[ok]
    tvec = origin[None, :] - a
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = np.einsum("j,ij->i", direction, qvec) * inv_det
    t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    ok &= (u >= -_EPS) & (v >= -_EPS) & (u + v <= 1.0 + _EPS) & (t > _EPS)

    hits = []
    for idx in np.nonzero(ok)[0]:
        hits.append(RayHit(face_index=int(idx), t=float(t[idx]),
                           point=origin + t[idx] * direction))
    return hits


def _ray_hits_aabb(origin, direction, lo, hi) -> bool:
    t_min, t_max = 0.0, math.inf
    for k in range(3):
        if abs(direction[k]) < 1e-15:
            if origin[k] < lo[k] or origin[k] > hi[k]:
                return False
            continue
        t1 = (lo[k] - origin[k]) / direction[k]
        t2 = (hi[k] - origin[k]) / direction[k]
        if t1 > t2:
            t1, t2 = t2, t1
        t_min = max(t_min, t1)
        t_max = min(t_max, t2)
    return t_min <= t_max


def fit_plane_pca(points, camera_hint=None) -> PlaneFrame:
    """PCA plane: centroid + two principal in-plane axes + least-variance normal.

    The normal sign is chosen toward camera_hint when given, else toward +y.
    """
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 3:
        raise DegenerateGeometryError(f"plane fit needs >= 3 points, got {len(pts)}")
    c = pts.mean(axis=0)
    centered = pts - c
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(s[0], 1e-30)
    if len(s) < 2 or s[1] / scale < 1e-9:
        raise DegenerateGeometryError("points are collinear; plane is underdetermined")
    u = vt[0]
    n = vt[2] if len(s) > 2 else np.cross(vt[0], vt[1])
    n = n / np.linalg.norm(n)

    reference = (np.asarray(camera_hint, dtype=np.float64) - c
                 if camera_hint is not None else np.array([0.0, 1.0, 0.0]))
    if float(n @ reference) < 0:
        n = -n
    v = np.cross(n, u)
    v /= np.linalg.norm(v)
    # re-derive u so that u x v == n exactly within rounding
    u = np.cross(v, n)
    u /= np.linalg.norm(u)
    return PlaneFrame(c=c, u=u, v=v, n=n)


def project_to_plane(p, frame: PlaneFrame):
    """In-plane coordinates x = <p - c, u>, y = <p - c, v>."""
    d = np.asarray(p, dtype=np.float64) - frame.c
    return float(d @ frame.u), float(d @ frame.v)


def unproject(x: float, y: float, frame: PlaneFrame) -> np.ndarray:
    return frame.c + x * frame.u + y * frame.v


def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise, no repeated endpoint."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 3:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1])


def min_area_rect(points2d) -> np.ndarray:
    """Minimum-area bounding rectangle via rotating calipers.

    Returns 4 corners counter-clockwise; one side is collinear with a
    convex-hull edge.
    """
    pts = np.asarray(points2d, dtype=np.float64)
    if len(pts) < 1:
        raise DegenerateGeometryError("no points")
    hull = convex_hull_2d(pts)
    if len(hull) < 3:
        raise DegenerateGeometryError("points are coincident or collinear")

    best = None
    edges = np.roll(hull, -1, axis=0) - hull
    for edge in edges:
        length = np.hypot(edge[0], edge[1])
        if length < 1e-15:
            continue
        ex, ey = edge / length
        rot = np.array([[ex, ey], [-ey, ex]])  # edge frame
        proj = hull @ rot.T
        x_min, y_min = proj.min(axis=0)
        x_max, y_max = proj.max(axis=0)
        area = (x_max - x_min) * (y_max - y_min)
        if best is None or area < best[0] - 1e-15:
            best = (area, rot, x_min, x_max, y_min, y_max)

    area, rot, x_min, x_max, y_min, y_max = best
    corners_local = np.array([
        [x_min, y_min], [x_max, y_min], [x_max, y_max], [x_min, y_max],
    ])
    return corners_local @ rot


def face_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    n = np.cross(b - a, c - a)
    norms = np.linalg.norm(n, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return n / norms


def simplify_facade(mesh, hit_face_indices, camera_hint=None,
                    planarity_threshold_deg: float = 10.0):
    """Collapse a locally planar set of hit faces into one quad.

    Returns (Quad3D, PlaneFrame, [triangle, triangle]).
    """
    vertices, faces = _mesh_arrays(mesh)
    idx = np.asarray(list(hit_face_indices), dtype=np.int64)
    if idx.size == 0:
        raise ArgumentError("no hit faces given")
    sub = faces[idx]

    normals = face_normals(vertices, sub)
    mean_n = normals[0].copy()
    for n in normals[1:]:
        mean_n += n if float(n @ normals[0]) >= 0 else -n
    mean_n /= np.linalg.norm(mean_n)
    cosines = np.abs(normals @ mean_n).clip(0.0, 1.0)
    spread = math.degrees(float(np.arccos(cosines.min())))
    if spread > planarity_threshold_deg:
        raise NonPlanarFacadeError(
            f"face-normal spread {spread:.2f} deg exceeds {planarity_threshold_deg} deg")

    vertex_ids = np.unique(sub.reshape(-1))
    pts = vertices[vertex_ids]
    frame = fit_plane_pca(pts, camera_hint=camera_hint)

    projected = np.array([project_to_plane(p, frame) for p in pts])
    rect = min_area_rect(projected)
    corners3d = np.array([unproject(x, y, frame) for x, y in rect])

    corners3d = _orient_quad(corners3d)
    quad = Quad3D(corners=corners3d)
    return quad, frame, quad.triangles()


def _orient_quad(corners: np.ndarray) -> np.ndarray:
    """Rotate the corner cycle so q1->q2 runs along the facade and q1->q4 points up."""
    best_k, best_score = 0, -math.inf
    for k in range(4):
        cycled = np.roll(corners, -k, axis=0)
        up_edge = cycled[3] - cycled[0]
        along = cycled[1] - cycled[0]
        score = up_edge[2] + 1e-6 * np.hypot(along[0], along[1])
        if score > best_score:
            best_score, best_k = score, k
    return np.roll(corners, -best_k, axis=0)


def camera_ray_grid(pose: CameraPose, base_z: float,
                    n_h: int = 10, n_v: int = 5,
                    pitch_range_deg: float = 5.0) -> tuple[np.ndarray, np.ndarray]:
    """(origin, directions) for the view-selection ray grid.

    Horizontal angles span pose.fov centered on the heading; pitches span
    +/- pitch_range_deg around level.
    """
    origin = np.array([pose.position[0], pose.position[1], base_z + pose.height])
    half = pose.fov / 2.0
    h_angles = np.linspace(pose.heading - half, pose.heading + half, n_h)
    pitches = (np.linspace(-pitch_range_deg, pitch_range_deg, n_v)
               if n_v > 1 else np.array([0.0]))
    dirs = []
    for pitch in pitches:
        cp = math.cos(math.radians(pitch))
        sp = math.sin(math.radians(pitch))
        for bearing in h_angles:
            b = math.radians(bearing)
            dirs.append([cp * math.sin(b), cp * math.cos(b), sp])
    return origin, np.asarray(dirs)


@dataclass
class BestView:
    index: int
    pose: CameraPose
    hit_faces: list[int]
    score: float


def select_best_view(mesh, candidate_poses: list[CameraPose], base_z: float = 0.0,
                     n_h: int = 10, n_v: int = 5,
                     offset_weight: float = 1.0) -> BestView:
    """Pick the pose with score = hit count - weight * horizontal offset to the hit centroid."""
    if not candidate_poses:
        raise ArgumentError("no candidate poses")
    best = None
    for i, pose in enumerate(candidate_poses):
        origin, dirs = camera_ray_grid(pose, base_z, n_h=n_h, n_v=n_v)
        nearest: dict[int, RayHit] = {}
        hit_points = []
        for d in dirs:
            hits = ray_mesh_hits(origin, d, mesh)
            if not hits:
                continue
            first = min(hits, key=lambda h: h.t)
            hit_points.append(first.point)
            prev = nearest.get(first.face_index)
            if prev is None or first.t < prev.t:
                nearest[first.face_index] = first
        if not hit_points:
            continue
        centroid = np.mean(hit_points, axis=0)
        offset = float(np.hypot(*(pose.position[:2] - centroid[:2])))
        score = len(hit_points) - offset_weight * offset
        if best is None or score > best.score:
            best = BestView(index=i, pose=pose,
                            hit_faces=sorted(nearest.keys()), score=score)
    if best is None:
        raise NoVisibleFacadeError("no candidate pose hits the mesh")
    return best
