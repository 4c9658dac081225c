"""Equirectangular panorama geometry, zenith consensus, and re-projection.

Conventions (used consistently across the package):

* pixel column x maps to longitude theta = (x/W - 1/2) * 360 deg,
  pixel row y maps to latitude phi = (y/H - 1/2) * 180 deg
  (so theta', phi' = 0 lands at pixel (W/2, H/2));
* a direction on the view sphere is
  v(theta, phi) = (cos phi sin theta, sin phi, cos phi cos theta)
  with y up, z forward, x right;
* rectification levels the image with the content rotation
  R_heading(-psi) . R_roll(-theta) . R_pitch(-phi), which maps the
  observed zenith to (0, 1, 0); the per-pixel inverse resampling applies
  its transpose to output directions to find source directions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, InsufficientEvidenceError, SingularAttitudeError

log = logging.getLogger(__name__)

_SNAP = 1e-6  # sampling coordinates this close to a grid point are snapped


@dataclass
class EquirectImage:
    pixels: np.ndarray  # (H, W, 3) uint8

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim == 2:
            self.pixels = np.repeat(self.pixels[:, :, None], 3, axis=2)
        if self.pixels.dtype != np.uint8:
            self.pixels = np.clip(np.rint(self.pixels), 0, 255).astype(np.uint8)
        h, w = self.pixels.shape[:2]
        if w != 2 * h:
            log.warning("equirectangular image is %dx%d, expected W = 2H", w, h)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class Attitude:
    pitch: float         # degrees
    roll: float          # degrees
    heading: float = 0.0  # degrees

    def __post_init__(self):
        for name in ("pitch", "roll"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ArgumentError(f"{name} is not finite")
            normalized = (value + 90.0) % 180.0 - 90.0
            if normalized == -90.0:
                normalized = 90.0
            object.__setattr__(self, name, normalized)

    def content_rotation(self) -> np.ndarray:
        """Rotation that levels the scene (maps the observed zenith to +y)."""
        return (rot_heading(-self.heading) @ rot_roll(-self.roll)
                @ rot_pitch(-self.pitch))

    def sample_rotation(self) -> np.ndarray:
        """Per-output-pixel rotation into the source panorama frame."""
        return self.content_rotation().T


@dataclass(frozen=True)
class ZenithEstimate:
    z: np.ndarray  # unit vector, z_y >= 0
    weight: int    # supporting segment count


def rot_pitch(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_roll(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_heading(deg: float) -> np.ndarray:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def dir_from_spherical(theta_deg, phi_deg):
    """v = (cos phi sin theta, sin phi, cos phi cos theta); accepts arrays."""
    theta = np.radians(theta_deg)
    phi = np.radians(phi_deg)
    cp = np.cos(phi)
    return np.stack([cp * np.sin(theta), np.sin(phi), cp * np.cos(theta)], axis=-1)


def spherical_from_dir(v):
    """(theta, phi) degrees with theta in [-180, 180), phi in [-90, 90].

    At the poles theta is defined as 0.
    """
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1)
    if np.any(norm < 1e-12):
        raise ArgumentError("zero vector has no spherical coordinates")
    x, y, z = v[..., 0] / norm, v[..., 1] / norm, v[..., 2] / norm
    theta = np.degrees(np.arctan2(x, z))
    phi = np.degrees(np.arcsin(np.clip(y, -1.0, 1.0)))
    theta = np.where(theta >= 180.0, theta - 360.0, theta)
    if v.ndim == 1:
        return float(theta), float(phi)
    return theta, phi


def pixel_from_angles(theta_deg, phi_deg, width: int, height: int):
    x = (np.asarray(theta_deg) / 360.0 + 0.5) * width
    y = (np.asarray(phi_deg) / 180.0 + 0.5) * height
    return x, y


def angles_from_pixel(x, y, width: int, height: int):
    theta = (np.asarray(x, dtype=np.float64) / width - 0.5) * 360.0
    phi = (np.asarray(y, dtype=np.float64) / height - 0.5) * 180.0
    return theta, phi


def bilinear_sample(pixels: np.ndarray, x, y, wrap_x: bool = True):
    """Bilinear sample with horizontal wrap and vertical clamp.

    Coordinates within 1e-6 of a grid point are snapped, so integer
    coordinates reproduce source pixels exactly.
    """
    h, w = pixels.shape[:2]
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    xr = np.rint(x)
    x = np.where(np.abs(x - xr) < _SNAP, xr, x)
    yr = np.rint(y)
    y = np.where(np.abs(y - yr) < _SNAP, yr, y)

    if wrap_x:
        x = np.mod(x, w)
    else:
        x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)

    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    x1 = (x0 + 1) % w if wrap_x else np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x0 = np.mod(x0, w) if wrap_x else x0

    values = pixels.astype(np.float64)
    if values.ndim == 2:
        values = values[:, :, None]
    fx = fx[..., None]
    fy = fy[..., None]
    top = values[y0, x0] * (1.0 - fx) + values[y0, x1] * fx
    bottom = values[y1, x0] * (1.0 - fx) + values[y1, x1] * fx
    out = top * (1.0 - fy) + bottom * fy
    if pixels.ndim == 2:
        out = out[..., 0]
    return out


def resample_rotated(pano: EquirectImage, sample_rotation: np.ndarray) -> EquirectImage:
    """Output pixel -> direction -> rotate -> source pixel -> bilinear sample."""
    h, w = pano.height, pano.width
    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    grid_x, grid_y = np.meshgrid(xs, ys)
    theta, phi = angles_from_pixel(grid_x, grid_y, w, h)
    dirs = dir_from_spherical(theta, phi)
    rotated = dirs @ sample_rotation.T
    theta_p = np.degrees(np.arctan2(rotated[..., 0], rotated[..., 2]))
    phi_p = np.degrees(np.arcsin(np.clip(rotated[..., 1], -1.0, 1.0)))
    src_x, src_y = pixel_from_angles(theta_p, phi_p, w, h)
    out = bilinear_sample(pano.pixels, src_x, src_y, wrap_x=True)
    return EquirectImage(pixels=np.clip(np.rint(out), 0, 255).astype(np.uint8))


def rectify(pano: EquirectImage, attitude: Attitude) -> EquirectImage:
    """Re-project the panorama into the leveled (and heading-adjusted) view."""
    return resample_rotated(pano, attitude.sample_rotation())


@dataclass(frozen=True)
class TileCamera:
    """Gnomonic (rectilinear) tile camera centered on the panorama sphere."""

    center_azimuth: float    # degrees
    center_elevation: float  # degrees
    fov: float               # degrees
    width: int
    height: int

    @property
    def focal(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.fov) / 2.0)

    def rotation(self) -> np.ndarray:
        """Camera-to-panorama rotation."""
        return rot_heading(self.center_azimuth) @ rot_pitch(-self.center_elevation)

    def dirs_from_pixels(self, x, y) -> np.ndarray:
        cx = (self.width - 1) / 2.0
        cy = (self.height - 1) / 2.0
        dx = (np.asarray(x, dtype=np.float64) - cx) / self.focal
        dy = (np.asarray(y, dtype=np.float64) - cy) / self.focal
        d = np.stack([dx, dy, np.ones_like(dx)], axis=-1)
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        return d @ self.rotation().T

    def pixels_from_dirs(self, dirs: np.ndarray):
        cam = np.asarray(dirs, dtype=np.float64) @ self.rotation()
        cx = (self.width - 1) / 2.0
        cy = (self.height - 1) / 2.0
        z = cam[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            x = cx + self.focal * cam[..., 0] / z
            y = cy + self.focal * cam[..., 1] / z
        return x, y, z > 1e-9


def extract_tiles(pano: EquirectImage, tile_fov: float = 90.0,
                  overlap: float = 0.5, tile_size: int | None = None
                  ) -> list[tuple[np.ndarray, TileCamera]]:
    """Overlapping gnomonic tiles around the horizon covering 360 degrees."""
    if not 0.0 <= overlap < 1.0:
        raise ArgumentError(f"overlap must be in [0, 1), got {overlap}")
    if tile_fov >= 180.0 or tile_fov <= 0.0:
        raise ArgumentError(f"tile fov must be in (0, 180), got {tile_fov}")
    step = tile_fov * (1.0 - overlap)
    count = int(round(360.0 / step))
    if tile_size is None:
        tile_size = max(64, int(round(pano.width * tile_fov / 360.0)))

    tiles = []
    for i in range(count):
        camera = TileCamera(center_azimuth=(i * step) % 360.0, center_elevation=0.0,
                            fov=tile_fov, width=tile_size, height=tile_size)
        xs = np.arange(tile_size, dtype=np.float64)
        grid_x, grid_y = np.meshgrid(xs, xs)
        dirs = camera.dirs_from_pixels(grid_x, grid_y)
        theta = np.degrees(np.arctan2(dirs[..., 0], dirs[..., 2]))
        phi = np.degrees(np.arcsin(np.clip(dirs[..., 1], -1.0, 1.0)))
        px, py = pixel_from_angles(theta, phi, pano.width, pano.height)
        tile = bilinear_sample(pano.pixels, px, py, wrap_x=True)
        tiles.append((np.clip(np.rint(tile), 0, 255).astype(np.uint8), camera))
    return tiles


@dataclass(frozen=True)
class LineSegment:
    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def length(self) -> float:
        return math.hypot(self.x2 - self.x1, self.y2 - self.y1)


def _segment_vertical_angle(seg: LineSegment) -> float:
    """Angle from the image vertical axis, degrees in [0, 90]."""
    dx = abs(seg.x2 - seg.x1)
    dy = abs(seg.y2 - seg.y1)
    return math.degrees(math.atan2(dx, dy))


def segment_great_circle_normal(seg: LineSegment, camera: TileCamera) -> np.ndarray:
    d1 = camera.dirs_from_pixels(seg.x1, seg.y1)
    d2 = camera.dirs_from_pixels(seg.x2, seg.y2)
    n = np.cross(d1, d2)
    norm = np.linalg.norm(n)
    if norm < 1e-12:
        raise ArgumentError("degenerate segment: endpoints coincide on the sphere")
    return n / norm


def estimate_tile_zenith(segments: list[LineSegment], camera: TileCamera,
                         vertical_tolerance: float = 30.0) -> ZenithEstimate:
    """Zenith supported by the tile's near-vertical segments.

    Each vertical world line lies in a plane through the camera containing
    the zenith; the plane normals are therefore all orthogonal to it, and
    the least-singular right vector of the stacked normals recovers it.
    """
    vertical = [s for s in segments if _segment_vertical_angle(s) <= vertical_tolerance]
    if len(vertical) < 2:
        raise InsufficientEvidenceError(
            f"need >= 2 near-vertical segments, got {len(vertical)}")
    normals = np.asarray([segment_great_circle_normal(s, camera) for s in vertical])
    _, _, vt = np.linalg.svd(normals, full_matrices=True)
    z = vt[-1]
    if z[1] < 0:
        z = -z
    return ZenithEstimate(z=z, weight=len(vertical))


def consensus_zenith(estimates: list[ZenithEstimate]) -> np.ndarray:
    """Dominant direction of the weight-replicated per-tile zeniths (SVD)."""
    if not estimates:
        raise ArgumentError("no zenith estimates")
    rows = []
    for est in estimates:
        rows.extend([est.z] * max(1, est.weight))
    stacked = np.asarray(rows)
    _, _, vt = np.linalg.svd(stacked, full_matrices=False)
    z = vt[0]
    if z[1] < 0:
        z = -z
    return z / np.linalg.norm(z)


def attitude_from_zenith(zenith) -> Attitude:
    """pitch = arctan(z_z / z_y), roll = -arctan(z_x / (sgn(z_y) sqrt(z_y^2 + z_z^2)))."""
    z = np.asarray(zenith, dtype=np.float64)
    zx, zy, zz = float(z[0]), float(z[1]), float(z[2])
    if zy == 0.0 and zz == 0.0:
        raise SingularAttitudeError("zenith lies on the x axis; pitch undefined")
    if zy == 0.0:
        pitch = math.copysign(90.0, zz)
    else:
        pitch = math.degrees(math.atan(zz / zy))
    sign = 1.0 if zy >= 0.0 else -1.0
    roll = -math.degrees(math.atan(zx / (sign * math.hypot(zy, zz))))
    return Attitude(pitch=pitch, roll=roll, heading=0.0)


def estimate_heading(segments_with_cameras: list[tuple[LineSegment, TileCamera]],
                     zenith: np.ndarray, min_segments: int = 20,
                     vertical_tolerance: float = 30.0) -> float:
    """Optional heading refinement from horizontal vanishing-point azimuths.

    Folds azimuths into [0, 90) (facade grids are 90-degree periodic),
    histograms them in 1-degree bins, and refines the peak with parabolic
    interpolation. Returns 0 when fewer than min_segments horizontal
    segments exist.
    """
    azimuths = []
    for seg, camera in segments_with_cameras:
        if _segment_vertical_angle(seg) <= 90.0 - vertical_tolerance:
            continue  # not horizontal enough
        normal = segment_great_circle_normal(seg, camera)
        vp = np.cross(normal, zenith)
        norm = np.linalg.norm(vp)
        if norm < 1e-9:
            continue
        vp /= norm
        azimuths.append(math.degrees(math.atan2(vp[0], vp[2])) % 90.0)
    if len(azimuths) < min_segments:
        return 0.0

    bins = np.zeros(90)
    for a in azimuths:
        bins[int(a) % 90] += 1
    peak = int(np.argmax(bins))
    prev, nxt = bins[(peak - 1) % 90], bins[(peak + 1) % 90]
    denom = bins[peak] * 2.0 - prev - nxt
    frac = 0.0 if denom <= 0 else 0.5 * (prev - nxt) / -denom
    heading = (peak + 0.5 + frac) % 90.0
    if heading >= 45.0:
        heading -= 90.0
    return heading
