"""Ortho-texture synthesis: rays from the camera, plane intersection, UV
mapping, bilinear sampling of the panorama.

The texture is generated texel-by-texel with inverse mapping (texel ->
world point -> panorama pixel) using the same spherical direction math as
the cast-ray description; the explicit ray grid remains available for
visibility and view selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .brep import CameraPose, PlaneFrame, Quad3D, face_normals
from .errors import ArgumentError, DegenerateViewError
from .imgio import save_image
from .panorama import (
    Attitude,
    EquirectImage,
    bilinear_sample,
    pixel_from_angles,
    rot_heading,
)

_EPS = 1e-9


@dataclass
class FacadeTexture:
    pixels: np.ndarray   # (H, W, 3) uint8, row 0 = top of the facade
    quad: Quad3D
    frame: PlaneFrame
    px_per_m: float
    uv_bounds: tuple[float, float, float, float]  # (u_min, u_max, v_min, v_max) meters


def camera_rays(pose: CameraPose, h_angles_rel, pitches, base_z: float = 0.0,
                facade_normal=None) -> list[tuple[np.ndarray, np.ndarray]]:
    """One ray per (pitch, horizontal angle) pair.

    Horizontal angles are relative to the pose heading; the origin sits at
    the pose position lifted by the camera height, nudged near_offset
    toward the facade when its normal is supplied.
    """
    if len(h_angles_rel) == 0 or len(pitches) == 0:
        raise ArgumentError("angle lists must be non-empty")
    origin = np.array([pose.position[0], pose.position[1], base_z + pose.height])
    if facade_normal is not None:
        n = np.asarray(facade_normal, dtype=np.float64)
        n = n / np.linalg.norm(n)
        origin = origin - pose.near_offset * n  # normal points toward the camera

    rays = []
    for pitch in pitches:
        cp = math.cos(math.radians(pitch))
        sp = math.sin(math.radians(pitch))
        for rel in h_angles_rel:
            b = math.radians(pose.heading + rel)
            direction = np.array([cp * math.sin(b), cp * math.cos(b), sp])
            rays.append((origin, direction))
    return rays


def ray_plane(origin, direction, frame: PlaneFrame):
    """t = ((p0 - o) . n) / (v . n); None when parallel or behind."""
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    denom = float(direction @ frame.n)
    if abs(denom) <= _EPS:
        return None
    t = float((frame.c - origin) @ frame.n) / denom
    if t <= 0.0:
        return None
    return t, origin + t * direction


def uv_from_point(p, frame: PlaneFrame, quad: Quad3D, tolerance: float = 1e-9):
    """Normalized (u, v) in [0, 1]^2 with q1 -> (0, 0) and q3 -> (1, 1).

    Returns None when the point falls outside the quad (clipping value).
    """
    p = np.asarray(p, dtype=np.float64)
    e_u = quad.q2 - quad.q1
    e_v = quad.q4 - quad.q1
    d = p - quad.q1
    u = float(d @ e_u) / float(e_u @ e_u)
    v = float(d @ e_v) / float(e_v @ e_v)
    if not (-tolerance <= u <= 1.0 + tolerance and -tolerance <= v <= 1.0 + tolerance):
        return None
    return u, v


def _enu_to_pano_frame(dirs: np.ndarray) -> np.ndarray:
    """(east, north, up) -> (right, up, forward) with forward = north."""
    return np.stack([dirs[..., 0], dirs[..., 2], dirs[..., 1]], axis=-1)


def synthesize_texture(pano: EquirectImage, pose: CameraPose, quad: Quad3D,
                       frame: PlaneFrame, px_per_m: float = 50.0,
                       attitude: Attitude | None = None,
                       base_z: float = 0.0) -> FacadeTexture:
    """Ortho-texture of the facade quad sampled from the panorama.

    Every texel maps to its world point on the quad, to the direction from
    the camera origin, through the inverse heading/attitude rotations, to
    spherical coordinates, and to a bilinear panorama sample.
    """
    origin = np.array([pose.position[0], pose.position[1], base_z + pose.height])
    centroid = quad.corners.mean(axis=0)
    view = centroid - origin
    if abs(float(view @ frame.n)) < 1e-6 * np.linalg.norm(view):
        raise DegenerateViewError("camera lies in the facade plane")

    e_u = quad.q2 - quad.q1
    e_v = quad.q4 - quad.q1
    width_m = float(np.linalg.norm(e_u))
    height_m = float(np.linalg.norm(e_v))
    out_w = max(1, int(round(width_m * px_per_m)))
    out_h = max(1, int(round(height_m * px_per_m)))

    # texel centers; PNG row 0 is the top of the facade (v = 1)
    us = (np.arange(out_w) + 0.5) / out_w
    vs = 1.0 - (np.arange(out_h) + 0.5) / out_h
    grid_u, grid_v = np.meshgrid(us, vs)
    points = (quad.q1[None, None, :]
              + grid_u[..., None] * e_u[None, None, :]
              + grid_v[..., None] * e_v[None, None, :])

    dirs = points - origin[None, None, :]
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)

    pano_dirs = _enu_to_pano_frame(dirs) @ rot_heading(-pose.heading).T
    if attitude is not None:
        pano_dirs = pano_dirs @ attitude.sample_rotation().T

    theta = np.degrees(np.arctan2(pano_dirs[..., 0], pano_dirs[..., 2]))
    phi = np.degrees(np.arcsin(np.clip(pano_dirs[..., 1], -1.0, 1.0)))
    px, py = pixel_from_angles(theta, phi, pano.width, pano.height)
    sampled = bilinear_sample(pano.pixels, px, py, wrap_x=True)
    pixels = np.clip(np.rint(sampled), 0, 255).astype(np.uint8)

    return FacadeTexture(pixels=pixels, quad=quad, frame=frame, px_per_m=px_per_m,
                         uv_bounds=(0.0, width_m, 0.0, height_m))


def flip_inward_normals(vertices: np.ndarray, faces: np.ndarray,
                        camera_pos) -> np.ndarray:
    """Reverse the winding of faces whose normals point away from the camera."""
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64).copy()
    camera = np.asarray(camera_pos, dtype=np.float64)
    normals = face_normals(vertices, faces)
    centroids = vertices[faces].mean(axis=1)
    inward = np.einsum("ij,ij->i", normals, camera[None, :] - centroids) < 0
    faces[inward] = faces[inward][:, ::-1]
    return faces


def export_textured(quad: Quad3D, texture: FacadeTexture, path_prefix) -> list[Path]:
    """Write <prefix>.obj, <prefix>.mtl and <prefix>.png for one facade."""
    if texture.pixels.size == 0:
        raise ArgumentError("texture is empty")
    prefix = Path(path_prefix)
    obj_path = prefix.with_suffix(".obj")
    mtl_path = prefix.with_suffix(".mtl")
    png_path = prefix.with_suffix(".png")

    save_image(texture.pixels, png_path)
    mtl_path.write_text(
        "newmtl facade\nKa 1 1 1\nKd 1 1 1\n"
        f"map_Kd {png_path.name}\n", encoding="utf-8")

    lines = [f"mtllib {mtl_path.name}", "usemtl facade"]
    for corner in quad.corners:
        lines.append("v " + " ".join(repr(float(c)) for c in corner))
    for u, v in ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)):
        lines.append(f"vt {u} {v}")
    lines.append("f 1/1 2/2 3/3")
    lines.append("f 1/1 3/3 4/4")
    obj_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [obj_path, mtl_path, png_path]
