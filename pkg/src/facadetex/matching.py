"""Keypoint matching, robust homography, tile stitching, ID association.

The built-in detector is Harris corners with an oriented, normalized
16x16 patch descriptor; externally computed keypoints (e.g. real SIFT
output) can be injected through the JSON format read by
load_keypoints_json, and every entry point accepts a detector callable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateGeometryError,
    InsufficientMatchesError,
    NoModelError,
)
from .imageproc import (
    Homography,
    fit_homography_dlt,
    gaussian_blur,
    homography_from_points,
    to_grayscale,
    warp_perspective,
)
from .panorama import bilinear_sample

_PATCH = 16  # descriptor patch side


@dataclass
class Keypoint:
    x: float
    y: float
    scale: float = 1.0
    orientation: float = 0.0  # radians
    descriptor: np.ndarray = field(default_factory=lambda: np.zeros(0))


@dataclass
class MatchSet:
    pairs: list[tuple[int, int, float]]  # (index_a, index_b, distance)
    inlier_flags: np.ndarray | None = None

    def points(self, kps_a: list[Keypoint], kps_b: list[Keypoint]):
        src = np.array([[kps_a[i].x, kps_a[i].y] for i, _, _ in self.pairs])
        dst = np.array([[kps_b[j].x, kps_b[j].y] for _, j, _ in self.pairs])
        return src, dst


def detect_and_describe(image: np.ndarray, max_features: int = 1000,
                        response_rel_threshold: float = 0.01) -> list[Keypoint]:
    """Harris corners + oriented, mean-free, L2-normalized patch descriptors."""
    gray = to_grayscale(image)
    h, w = gray.shape
    if min(h, w) < _PATCH * 2:
        return []

    padded = np.pad(gray, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) * 0.5
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) * 0.5

    ixx = gaussian_blur(gx * gx, 5, 1.5)
    iyy = gaussian_blur(gy * gy, 5, 1.5)
    ixy = gaussian_blur(gx * gy, 5, 1.5)
    det = ixx * iyy - ixy * ixy
    trace = ixx + iyy
    response = det - 0.04 * trace * trace

    peak = float(response.max())
    if peak <= 0:
        return []
    threshold = response_rel_threshold * peak

    # 3x3 non-maximum suppression
    resp_pad = np.pad(response, 1, mode="constant", constant_values=-np.inf)
    is_max = np.ones_like(response, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            is_max &= response >= resp_pad[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    border = _PATCH
    keep = is_max & (response > threshold)
    keep[:border, :] = keep[-border:, :] = False
    keep[:, :border] = keep[:, -border:] = False

    ys, xs = np.nonzero(keep)
    if len(xs) == 0:
        return []
    order = np.argsort(-response[ys, xs], kind="stable")[:max_features]
    ys, xs = ys[order], xs[order]

    # orientation from blurred gradients
    gx_s = gaussian_blur(gx, 5, 1.5)
    gy_s = gaussian_blur(gy, 5, 1.5)

    keypoints = []
    half = _PATCH / 2.0 - 0.5
    grid = np.arange(_PATCH) - half
    gu, gv = np.meshgrid(grid, grid)
    for x, y in zip(xs, ys):
        angle = math.atan2(float(gy_s[y, x]), float(gx_s[y, x]))
        ca, sa = math.cos(angle), math.sin(angle)
        sample_x = x + gu * ca - gv * sa
        sample_y = y + gu * sa + gv * ca
        patch = bilinear_sample(gray, np.clip(sample_x, 0, w - 1),
                                np.clip(sample_y, 0, h - 1), wrap_x=False)
        patch = patch - patch.mean()
        norm = np.linalg.norm(patch)
        if norm < 1e-9:
            continue
        keypoints.append(Keypoint(x=float(x), y=float(y), scale=1.0,
                                  orientation=angle,
                                  descriptor=(patch / norm).ravel()))
    return keypoints


def load_keypoints_json(path) -> list[Keypoint]:
    """Injection format: {"points": [{"x":..,"y":..,"desc":[..]}, ...]}."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    keypoints = []
    for entry in data.get("points", []):
        desc = np.asarray(entry.get("desc", []), dtype=np.float64)
        norm = np.linalg.norm(desc)
        if norm > 0:
            desc = desc / norm
        keypoints.append(Keypoint(x=float(entry["x"]), y=float(entry["y"]),
                                  scale=float(entry.get("scale", 1.0)),
                                  orientation=float(entry.get("orientation", 0.0)),
                                  descriptor=desc))
    return keypoints


def match_ratio(desc_a: np.ndarray, desc_b: np.ndarray, ratio: float = 0.75) -> MatchSet:
    """2-NN Lowe ratio test with a symmetric cross-check."""
    a = np.asarray(desc_a, dtype=np.float64)
    b = np.asarray(desc_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        return MatchSet(pairs=[])
    if a.shape[1] != b.shape[1]:
        raise ArgumentError("descriptor lengths differ")
    if len(b) < 2:
        return MatchSet(pairs=[])  # no second neighbour to test against

    # squared L2 distances
    d2 = (np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :]
          - 2.0 * (a @ b.T))
    d2 = np.maximum(d2, 0.0)
    order = np.argsort(d2, axis=1, kind="stable")
    best = order[:, 0]
    second = order[:, 1]
    d1 = np.sqrt(d2[np.arange(len(a)), best])
    d2nd = np.sqrt(d2[np.arange(len(a)), second])

    back_best = np.argmin(d2, axis=0)  # best a for each b
    pairs = []
    for i in range(len(a)):
        if d2nd[i] <= 1e-12:
            continue
        if d1[i] / d2nd[i] >= ratio:
            continue
        j = int(best[i])
        if int(back_best[j]) != i:
            continue
        pairs.append((i, j, float(d1[i])))
    return MatchSet(pairs=pairs)


def _symmetric_error(h: Homography, h_inv: Homography,
                     src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    forward = np.linalg.norm(h.apply(src) - dst, axis=1)
    backward = np.linalg.norm(h_inv.apply(dst) - src, axis=1)
    return np.maximum(forward, backward)


def ransac_homography(src: np.ndarray, dst: np.ndarray, reproj_px: float = 3.0,
                      iters: int = 2000, seed: int = 0
                      ) -> tuple[Homography, np.ndarray]:
    """Seeded RANSAC over minimal 4-point samples, refit on the inliers."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    n = len(src)
    if n < 4:
        raise InsufficientMatchesError(f"need >= 4 pairs, got {n}")

    rng = np.random.default_rng(seed)
    best_count = -1
    best_flags = None
    for _ in range(iters):
        sample = rng.choice(n, size=4, replace=False)
        try:
            model = homography_from_points(src[sample], dst[sample])
            model_inv = model.inverse()
        except DegenerateGeometryError:
            continue
        errors = _symmetric_error(model, model_inv, src, dst)
        flags = errors < reproj_px
        count = int(flags.sum())
        if count > best_count:
            best_count = count
            best_flags = flags

    if best_flags is None or best_count < 4:
        raise NoModelError(f"best sample explains {max(best_count, 0)} pairs (< 4)")

    refit = fit_homography_dlt(src[best_flags], dst[best_flags])
    final_flags = _symmetric_error(refit, refit.inverse(), src, dst) < reproj_px
    if int(final_flags.sum()) < 4:
        raise NoModelError("refit model explains fewer than 4 pairs")
    return refit, final_flags


def _border_distance_weights(height: int, width: int) -> np.ndarray:
    xs = np.arange(width, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)
    wx = np.minimum(xs + 1.0, width - xs)
    wy = np.minimum(ys + 1.0, height - ys)
    return np.minimum.outer(wy, wx)


def warp_and_blend(reference: np.ndarray, source: np.ndarray,
                   homography: Homography) -> np.ndarray:
    """Warp source into the reference frame and feather-blend the overlap."""
    reference = np.asarray(reference)
    source = np.asarray(source)
    ref_h, ref_w = reference.shape[:2]
    src_h, src_w = source.shape[:2]

    corners = np.array([[0, 0], [src_w - 1, 0], [src_w - 1, src_h - 1], [0, src_h - 1]],
                       dtype=np.float64)
    warped_corners = homography.apply(corners)
    xs = np.concatenate([warped_corners[:, 0], [0, ref_w - 1]])
    ys = np.concatenate([warped_corners[:, 1], [0, ref_h - 1]])
    x_lo = int(math.floor(xs.min()))
    y_lo = int(math.floor(ys.min()))
    x_hi = int(math.ceil(xs.max()))
    y_hi = int(math.ceil(ys.max()))
    out_w = x_hi - x_lo + 1
    out_h = y_hi - y_lo + 1

    shift = np.array([[1.0, 0.0, -x_lo], [0.0, 1.0, -y_lo], [0.0, 0.0, 1.0]])
    shifted = Homography(matrix=shift @ homography.matrix)

    warped_src = warp_perspective(source.astype(np.float64), shifted, out_w, out_h)
    warped_w = warp_perspective(_border_distance_weights(src_h, src_w), shifted,
                                out_w, out_h)

    canvas_ref = np.zeros((out_h, out_w) + reference.shape[2:], dtype=np.float64)
    weight_ref = np.zeros((out_h, out_w), dtype=np.float64)
    oy, ox = -y_lo, -x_lo
    canvas_ref[oy:oy + ref_h, ox:ox + ref_w] = reference
    weight_ref[oy:oy + ref_h, ox:ox + ref_w] = _border_distance_weights(ref_h, ref_w)

    total = weight_ref + warped_w
    safe_total = np.where(total > 0, total, 1.0)
    if canvas_ref.ndim == 3:
        blended = (canvas_ref * weight_ref[..., None]
                   + warped_src * warped_w[..., None]) / safe_total[..., None]
    else:
        blended = (canvas_ref * weight_ref + warped_src * warped_w) / safe_total
    return np.clip(np.rint(blended), 0, 255).astype(np.uint8)


def count_inliers(image_a: np.ndarray, image_b: np.ndarray, seed: int = 0,
                  ratio: float = 0.75, reproj_px: float = 3.0, iters: int = 2000,
                  detector=detect_and_describe) -> int:
    """Inlier count of the RANSAC homography between two images (0 on failure)."""
    kps_a = detector(image_a)
    kps_b = detector(image_b)
    if len(kps_a) < 4 or len(kps_b) < 4:
        return 0
    desc_a = np.asarray([k.descriptor for k in kps_a])
    desc_b = np.asarray([k.descriptor for k in kps_b])
    matches = match_ratio(desc_a, desc_b, ratio)
    if len(matches.pairs) < 4:
        return 0
    src, dst = matches.points(kps_a, kps_b)
    try:
        _, flags = ransac_homography(src, dst, reproj_px=reproj_px, iters=iters, seed=seed)
    except (InsufficientMatchesError, NoModelError):
        return 0
    return int(flags.sum())


def associate_ids(labeled: list[tuple[str, np.ndarray]], unlabeled: list[np.ndarray],
                  min_inliers: int = 15, seed: int = 0,
                  detector=detect_and_describe, **ransac_kwargs
                  ) -> list[tuple[str | None, int]]:
    """Assign each unlabeled image the id with the most RANSAC inliers.

    Returns (building_id or None, inlier count) per unlabeled image; ties
    and sub-threshold maxima stay unassigned.
    """
    if min_inliers < 4:
        raise ArgumentError("min_inliers must be >= 4")
    results = []
    for u_index, image in enumerate(unlabeled):
        scores = []
        for l_index, (building_id, labeled_image) in enumerate(labeled):
            pair_seed = seed * 1_000_003 + l_index * 1009 + u_index
            inliers = count_inliers(labeled_image, image, seed=pair_seed,
                                    detector=detector, **ransac_kwargs)
            scores.append((inliers, building_id))
        if not scores:
            results.append((None, 0))
            continue
        best_count = max(s[0] for s in scores)
        winners = [s for s in scores if s[0] == best_count]
        if best_count < min_inliers or len(winners) != 1:
            results.append((None, best_count))
        else:
            results.append((winners[0][1], best_count))
    return results


def write_association_csv(rows: list[tuple[str, str | None, int]], path) -> None:
    """Rows of (tile name, building id or None, inliers)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("tile,building_id,inliers\n")
        for tile, building_id, inliers in rows:
            fh.write(f"{tile},{building_id or ''},{inliers}\n")
