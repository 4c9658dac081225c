"""Ground-truth opening masks from LoD3 walls and aligned mask scoring.

Wall + opening polygons are PCA-projected to the facade plane and
rasterized; openings closer than the proximity threshold merge into one
group. Prediction scoring runs a two-stage scale/shift grid search that
transforms the ground-truth mask (scale about its centroid, then shift,
nearest neighbour) and maximizes IoU.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .brep import PlaneFrame, convex_hull_2d, fit_plane_pca, project_to_plane
from .citygml import BRepBuilding
from .errors import ArgumentError, DegenerateGeometryError
from .imageproc import mask_iou, rasterize_polygon, ssim
from .panorama import bilinear_sample


@dataclass
class GtFacadeMask:
    mask: np.ndarray      # bool; facade true, openings false
    frame: PlaneFrame
    px_per_m: float
    opening_count: int    # number of proximity groups


@dataclass
class AlignmentResult:
    scale: float
    dx: int
    dy: int
    iou: float


@dataclass
class EvalReport:
    raw_iou: float
    aligned_iou: float
    ssim: float
    alignment: AlignmentResult
    lpips: str = "not computed"

    def to_dict(self) -> dict:
        return {
            "raw_iou": self.raw_iou,
            "aligned_iou": self.aligned_iou,
            "ssim": self.ssim,
            "scale": self.alignment.scale,
            "dx": self.alignment.dx,
            "dy": self.alignment.dy,
            "lpips": self.lpips,
        }


# ---------------------------------------------------------------------------
# opening grouping


def _segment_distance(a1, a2, b1, b2) -> float:
    def point_segment(p, s1, s2):
        seg = s2 - s1
        denom = float(seg @ seg)
        t = 0.0 if denom == 0 else float(np.clip((p - s1) @ seg / denom, 0.0, 1.0))
        return float(np.linalg.norm(p - (s1 + t * seg)))

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(a1, a2, b1), orient(a1, a2, b2)
    d3, d4 = orient(b1, b2, a1), orient(b1, b2, a2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return 0.0
    return min(point_segment(b1, a1, a2), point_segment(b2, a1, a2),
               point_segment(a1, b1, b2), point_segment(a2, b1, b2))


def hull_distance(poly_a: np.ndarray, poly_b: np.ndarray) -> float:
    """Minimum distance between the convex hulls of two 2D polygons."""
    hull_a = convex_hull_2d(np.asarray(poly_a, dtype=np.float64))
    hull_b = convex_hull_2d(np.asarray(poly_b, dtype=np.float64))

    def inside(point, hull):
        n = len(hull)
        if n < 3:
            return False
        sign = 0.0
        for i in range(n):
            a, b = hull[i], hull[(i + 1) % n]
            cross = (b[0] - a[0]) * (point[1] - a[1]) - (b[1] - a[1]) * (point[0] - a[0])
            if abs(cross) < 1e-12:
                continue
            if sign == 0.0:
                sign = cross
            elif sign * cross < 0:
                return False
        return True

    if any(inside(p, hull_b) for p in hull_a) or any(inside(p, hull_a) for p in hull_b):
        return 0.0
    best = math.inf
    na, nb = len(hull_a), len(hull_b)
    for i in range(na):
        for j in range(nb):
            best = min(best, _segment_distance(hull_a[i], hull_a[(i + 1) % na],
                                               hull_b[j], hull_b[(j + 1) % nb]))
    return best


def group_openings(openings2d: list[np.ndarray], threshold: float = 0.1
                   ) -> list[list[int]]:
    """Transitive grouping of openings whose hull distance < threshold."""
    n = len(openings2d)
    adjacency = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if hull_distance(openings2d[i], openings2d[j]) < threshold:
                adjacency[i].append(j)
                adjacency[j].append(i)
    seen = [False] * n
    groups = []
    for start in range(n):
        if seen[start]:
            continue
        stack, group = [start], []
        seen[start] = True
        while stack:
            node = stack.pop()
            group.append(node)
            for neighbor in adjacency[node]:
                if not seen[neighbor]:
                    seen[neighbor] = True
                    stack.append(neighbor)
        groups.append(sorted(group))
    return groups


# ---------------------------------------------------------------------------
# ground-truth extraction


def extract_gt_mask(building: BRepBuilding, wall_index: int, px_per_m: float = 50.0,
                    grouping_distance: float = 0.1) -> GtFacadeMask:
    """Rasterize wall minus grouped openings on the PCA facade plane."""
    if not 0 <= wall_index < len(building.walls):
        raise ArgumentError(f"wall index {wall_index} out of range "
                            f"(building has {len(building.walls)} walls)")
    wall = building.walls[wall_index]
    if len(wall.ring) < 3:
        raise DegenerateGeometryError("wall polygon has fewer than 3 vertices")

    points = [wall.ring] + [o.ring for o in wall.openings]
    frame = fit_plane_pca(np.vstack(points))

    wall2d = np.asarray([project_to_plane(p, frame) for p in wall.ring])
    openings2d = [np.asarray([project_to_plane(p, frame) for p in o.ring])
                  for o in wall.openings]

    lo = wall2d.min(axis=0)
    hi = wall2d.max(axis=0)
    span = hi - lo
    if span.min() <= 0:
        raise DegenerateGeometryError("wall projects to a degenerate extent")
    width = max(1, int(round(span[0] * px_per_m)))
    height = max(1, int(round(span[1] * px_per_m)))

    def to_px(pts):
        return (pts - lo) * px_per_m

    mask = rasterize_polygon(to_px(wall2d), width, height)
    for opening in openings2d:
        mask &= ~rasterize_polygon(to_px(opening), width, height)

    groups = group_openings(openings2d, grouping_distance)
    return GtFacadeMask(mask=mask, frame=frame, px_per_m=px_per_m,
                        opening_count=len(groups))


# ---------------------------------------------------------------------------
# alignment search


def resize_mask(mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample + 0.5 threshold."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape == (out_h, out_w):
        return mask
    in_h, in_w = mask.shape
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    grid_x, grid_y = np.meshgrid(np.clip(xs, 0, in_w - 1), np.clip(ys, 0, in_h - 1))
    values = bilinear_sample(mask.astype(np.float64), grid_x, grid_y, wrap_x=False)
    return values >= 0.5


def _scale_mask_about_centroid(mask: np.ndarray, scale: float) -> np.ndarray:
    """Nearest-neighbour scaling about the mask centroid."""
    if scale == 1.0:
        return mask
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return mask
    cx = xs.mean()
    cy = ys.mean()
    grid_x, grid_y = np.meshgrid(np.arange(w, dtype=np.float64),
                                 np.arange(h, dtype=np.float64))
    src_x = np.rint((grid_x - cx) / scale + cx).astype(np.int64)
    src_y = np.rint((grid_y - cy) / scale + cy).astype(np.int64)
    valid = (src_x >= 0) & (src_x < w) & (src_y >= 0) & (src_y < h)
    out = np.zeros_like(mask)
    out[valid] = mask[src_y[valid], src_x[valid]]
    return out


def _shifted_iou(pred: np.ndarray, scaled: np.ndarray, dx: int, dy: int,
                 pred_count: int) -> float:
    """IoU of pred with `scaled` translated by (dx, dy), clipped to the frame."""
    h, w = pred.shape
    x_lo_out, x_lo_in = (dx, 0) if dx >= 0 else (0, -dx)
    y_lo_out, y_lo_in = (dy, 0) if dy >= 0 else (0, -dy)
    width = w - abs(dx)
    height = h - abs(dy)
    if width <= 0 or height <= 0:
        return 0.0
    out_slice = (slice(y_lo_out, y_lo_out + height), slice(x_lo_out, x_lo_out + width))
    in_slice = (slice(y_lo_in, y_lo_in + height), slice(x_lo_in, x_lo_in + width))
    moved = scaled[in_slice]
    inter = int(np.count_nonzero(pred[out_slice] & moved))
    moved_count = int(np.count_nonzero(moved))
    union = pred_count + moved_count - inter
    if union == 0:
        return 0.0
    return inter / union


def align_and_score(pred: np.ndarray, gt: np.ndarray,
                    scale_min: float = 0.75, scale_max: float = 1.2,
                    scale_step: float = 0.05, scale_step_fine: float = 0.01,
                    shift_max: int = 100, shift_step: int = 10,
                    shift_step_fine: int = 2) -> AlignmentResult:
    """Two-stage grid search for the (scale, shift) of GT that maximizes IoU.

    Ties prefer the smaller |scale - 1|, then the smaller |dx| + |dy|.
    """
    gt = np.asarray(gt, dtype=bool)
    pred = resize_mask(np.asarray(pred, dtype=bool), gt.shape[0], gt.shape[1])
    if not pred.any() or not gt.any():
        return AlignmentResult(scale=1.0, dx=0, dy=0, iou=0.0)
    pred_count = int(np.count_nonzero(pred))

    def scales_between(lo, hi, step):
        values = []
        k = 0
        while True:
            s = round(lo + k * step, 10)
            if s > hi + 1e-9:
                break
            values.append(s)
            k += 1
        return values

    def search(scales, shifts_x, shifts_y, best=None):
        for scale in scales:
            scaled = _scale_mask_about_centroid(gt, scale)
            for dy in shifts_y:
                for dx in shifts_x:
                    iou = _shifted_iou(pred, scaled, dx, dy, pred_count)
                    candidate = AlignmentResult(scale=scale, dx=dx, dy=dy, iou=iou)
                    if best is None or _better(candidate, best):
                        best = candidate
        return best

    def _better(a: AlignmentResult, b: AlignmentResult) -> bool:
        if a.iou > b.iou + 1e-12:
            return True
        if abs(a.iou - b.iou) > 1e-12:
            return False
        if abs(a.scale - 1.0) < abs(b.scale - 1.0) - 1e-12:
            return True
        if abs(a.scale - 1.0) > abs(b.scale - 1.0) + 1e-12:
            return False
        return abs(a.dx) + abs(a.dy) < abs(b.dx) + abs(b.dy)

    coarse_shifts = list(range(-shift_max, shift_max + 1, shift_step))
    stage1 = search(scales_between(scale_min, scale_max, scale_step),
                    coarse_shifts, coarse_shifts)

    fine_scales = [s for s in scales_between(stage1.scale - scale_step,
                                             stage1.scale + scale_step,
                                             scale_step_fine)
                   if scale_min - 1e-9 <= s <= scale_max + 1e-9]
    fine_x = [dx for dx in range(stage1.dx - shift_step, stage1.dx + shift_step + 1,
                                 shift_step_fine) if abs(dx) <= shift_max]
    fine_y = [dy for dy in range(stage1.dy - shift_step, stage1.dy + shift_step + 1,
                                 shift_step_fine) if abs(dy) <= shift_max]
    return search(fine_scales, fine_x, fine_y, best=stage1)


def evaluate_pair(pred: np.ndarray, gt: np.ndarray, **align_kwargs) -> EvalReport:
    """Raw IoU, alignment-compensated IoU, and SSIM on the aligned masks."""
    gt = np.asarray(gt, dtype=bool)
    pred = resize_mask(np.asarray(pred, dtype=bool), gt.shape[0], gt.shape[1])
    raw = mask_iou(pred, gt)
    alignment = align_and_score(pred, gt, **align_kwargs)
    aligned_gt = _scale_mask_about_centroid(gt, alignment.scale)
    aligned_gt = _translate_mask(aligned_gt, alignment.dx, alignment.dy)
    score = ssim(np.where(pred, 255, 0).astype(np.uint8),
                 np.where(aligned_gt, 255, 0).astype(np.uint8))
    return EvalReport(raw_iou=raw, aligned_iou=alignment.iou, ssim=score,
                      alignment=alignment)


def _translate_mask(mask: np.ndarray, dx: int, dy: int) -> np.ndarray:
    out = np.zeros_like(mask)
    h, w = mask.shape
    x_lo_out, x_lo_in = (dx, 0) if dx >= 0 else (0, -dx)
    y_lo_out, y_lo_in = (dy, 0) if dy >= 0 else (0, -dy)
    width = w - abs(dx)
    height = h - abs(dy)
    if width > 0 and height > 0:
        out[y_lo_out:y_lo_out + height, x_lo_out:x_lo_out + width] = \
            mask[y_lo_in:y_lo_in + height, x_lo_in:x_lo_in + width]
    return out


def batch_mean(reports: list[EvalReport]) -> dict:
    if not reports:
        return {"raw_iou": 0.0, "aligned_iou": 0.0, "ssim": 0.0}
    return {
        "raw_iou": float(np.mean([r.raw_iou for r in reports])),
        "aligned_iou": float(np.mean([r.aligned_iou for r in reports])),
        "ssim": float(np.mean([r.ssim for r in reports])),
    }


def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_summary_csv(rows: list[tuple], path) -> None:
    """Rows of (building_id, wall, EvalReport)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("building_id,wall,raw_iou,aligned_iou,ssim,scale,dx,dy\n")
        for building_id, wall, report in rows:
            a = report.alignment
            fh.write(f"{building_id},{wall},{report.raw_iou!r},{report.aligned_iou!r},"
                     f"{report.ssim!r},{a.scale!r},{a.dx},{a.dy}\n")
