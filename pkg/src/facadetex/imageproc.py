"""Raster and 2D geometry primitives.

Binary masks are plain boolean numpy arrays (row-major, [row, col]);
images are uint8 arrays, RGB or grayscale. Everything here is pure and
deterministic: contours via Moore border following, hulls via monotone
chain, polygon IoU via shared-grid rasterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .brep import convex_hull_2d, min_area_rect
from .errors import ArgumentError, DegenerateGeometryError, EmptyMaskError

# ---------------------------------------------------------------------------
# filtering


def to_grayscale(image: np.ndarray) -> np.ndarray:
    """Luma conversion (Rec. 601); float64 output."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        return img
    return img[..., 0] * 0.299 + img[..., 1] * 0.587 + img[..., 2] * 0.114


def gaussian_kernel_1d(size: int, sigma: float | None = None) -> np.ndarray:
    if size % 2 == 0 or size < 1:
        raise ArgumentError(f"kernel size must be odd and positive, got {size}")
    if sigma is None:
        sigma = 0.3 * ((size - 1) / 2.0 - 1.0) + 0.8
    if sigma <= 0:
        raise ArgumentError(f"sigma must be positive, got {sigma}")
    half = (size - 1) // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _convolve_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    half = (len(kernel) - 1) // 2
    pad = [(0, 0)] * img.ndim
    pad[axis] = (half, half)
    padded = np.pad(img, pad, mode="reflect")
    out = np.zeros_like(img, dtype=np.float64)
    slicer = [slice(None)] * img.ndim
    n = img.shape[axis]
    for i, weight in enumerate(kernel):
        slicer[axis] = slice(i, i + n)
        out += weight * padded[tuple(slicer)]
    return out


def gaussian_blur(image: np.ndarray, kernel_size: int, sigma: float | None = None) -> np.ndarray:
    """Separable Gaussian blur, sum-1 kernel, reflect border; float64 output."""
    kernel = gaussian_kernel_1d(kernel_size, sigma)
    img = np.asarray(image, dtype=np.float64)
    out = _convolve_axis(img, kernel, axis=0)
    return _convolve_axis(out, kernel, axis=1)


# ---------------------------------------------------------------------------
# morphology


def _window_any(mask: np.ndarray, k: int, axis: int) -> np.ndarray:
    before, after = (k - 1) // 2, k // 2
    pad = [(0, 0)] * mask.ndim
    pad[axis] = (before, after)
    padded = np.pad(mask, pad, mode="constant", constant_values=False)
    windows = np.lib.stride_tricks.sliding_window_view(padded, k, axis=axis)
    return windows.any(axis=-1)


def _window_all(mask: np.ndarray, k: int, axis: int) -> np.ndarray:
    before, after = (k - 1) // 2, k // 2
    pad = [(0, 0)] * mask.ndim
    pad[axis] = (before, after)
    padded = np.pad(mask, pad, mode="constant", constant_values=False)
    windows = np.lib.stride_tricks.sliding_window_view(padded, k, axis=axis)
    return windows.all(axis=-1)


def dilate(mask: np.ndarray, kernel: tuple[int, int]) -> np.ndarray:
    k_rows, k_cols = kernel
    out = _window_any(np.asarray(mask, dtype=bool), k_rows, axis=0)
    return _window_any(out, k_cols, axis=1)


def erode(mask: np.ndarray, kernel: tuple[int, int]) -> np.ndarray:
    k_rows, k_cols = kernel
    out = _window_all(np.asarray(mask, dtype=bool), k_rows, axis=0)
    return _window_all(out, k_cols, axis=1)


def morphology(mask: np.ndarray, op: str, kernel: tuple[int, int] | int) -> np.ndarray:
    """Set-theoretic dilate/erode/open/close with a rectangular element.

    Closing runs on a canvas padded by the kernel extent so that image
    borders never clip the intermediate dilation.
    """
    if isinstance(kernel, int):
        kernel = (kernel, kernel)
    k_rows, k_cols = kernel
    if k_rows < 1 or k_cols < 1:
        raise ArgumentError(f"kernel sides must be >= 1, got {kernel}")
    mask = np.asarray(mask, dtype=bool)
    if op == "dilate":
        return dilate(mask, kernel)
    if op == "erode":
        return erode(mask, kernel)
    if op == "open":
        return dilate(erode(mask, kernel), kernel)
    if op == "close":
        padded = np.pad(mask, ((k_rows, k_rows), (k_cols, k_cols)),
                        mode="constant", constant_values=False)
        closed = erode(dilate(padded, kernel), kernel)
        return closed[k_rows:-k_rows, k_cols:-k_cols]
    raise ArgumentError(f"unknown morphology op {op!r}")


# ---------------------------------------------------------------------------
# connected components


def connected_components(mask: np.ndarray, connectivity: int = 8
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Label connected true regions.

    Returns (labels, areas): labels is int32 with 0 = background and
    labels 1..n assigned in raster-scan discovery order; areas[i] is the
    pixel count of label i + 1.
    """
    if connectivity not in (4, 8):
        raise ArgumentError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)

    parent: list[int] = []

    def find(i: int) -> int:
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    def union(i: int, j: int):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    # run-based two-pass labelling
    run_rows: list[int] = []
    run_spans: list[tuple[int, int]] = []
    prev_runs: list[tuple[int, int, int]] = []  # (start, end, run_id)
    for row in range(h):
        line = mask[row]
        if not line.any():
            prev_runs = []
            continue
        padded = np.concatenate(([False], line, [False]))
        changes = np.nonzero(np.diff(padded.astype(np.int8)))[0]
        starts, ends = changes[0::2], changes[1::2]
        current = []
        for start, end in zip(starts, ends):
            run_id = len(parent)
            parent.append(run_id)
            run_rows.append(row)
            run_spans.append((int(start), int(end)))
            reach = 1 if connectivity == 8 else 0
            for p_start, p_end, p_id in prev_runs:
                if p_start < end + reach and start - reach < p_end:
                    union(run_id, p_id)
            current.append((int(start), int(end), run_id))
        prev_runs = current

    # assign final labels in raster-scan order of each root's first run
    root_label: dict[int, int] = {}
    next_label = 1
    for run_id in range(len(parent)):
        root = find(run_id)
        if root not in root_label:
            root_label[root] = next_label
            next_label += 1
    areas = np.zeros(next_label - 1, dtype=np.int64)
    for run_id, (row, (start, end)) in enumerate(zip(run_rows, run_spans)):
        label = root_label[find(run_id)]
        labels[row, start:end] = label
        areas[label - 1] += end - start
    return labels, areas


def remove_small_components(mask: np.ndarray, min_area: int,
                            connectivity: int = 8) -> np.ndarray:
    labels, areas = connected_components(mask, connectivity)
    if len(areas) == 0:
        return np.zeros_like(np.asarray(mask, dtype=bool))
    keep = np.concatenate(([False], areas >= min_area))
    return keep[labels]


# ---------------------------------------------------------------------------
# contours and hulls

_MOORE_OFFSETS = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def trace_outer_contour(component: np.ndarray) -> np.ndarray:
    """Moore border following; (n, 2) array of (x, y) boundary pixels."""
    ys, xs = np.nonzero(component)
    if len(xs) == 0:
        raise EmptyMaskError("cannot trace an empty component")
    start = (int(ys[0]), int(xs[0]))  # raster-first pixel

    h, w = component.shape

    def filled(p):
        return 0 <= p[0] < h and 0 <= p[1] < w and component[p[0], p[1]]

    contour = [start]
    # enter from the left of the start pixel
    backtrack_dir = 6  # pointing west
    current = start
    first_move = None
    while True:
        found = False
        for step in range(8):
            direction = (backtrack_dir + 1 + step) % 8
            dy, dx = _MOORE_OFFSETS[direction]
            candidate = (current[0] + dy, current[1] + dx)
            if filled(candidate):
                if candidate != contour[-1] or len(contour) == 1:
                    contour.append(candidate)
                # new backtrack points from candidate to previous neighbour
                backtrack_dir = (direction + 4) % 8
                current = candidate
                move = direction
                found = True
                break
        if not found:
            break  # isolated pixel
        if first_move is None:
            first_move = move
        elif current == start and move == first_move:
            break  # Jacob's stopping criterion
        if len(contour) > 4 * (h * w):
            raise RuntimeError("contour tracing did not terminate")
    if contour[-1] == start and len(contour) > 1:
        contour = contour[:-1]
    return np.asarray([(x, y) for y, x in contour], dtype=np.float64)


def convex_hull_of_largest_contour(mask: np.ndarray) -> np.ndarray:
    """Counter-clockwise hull of the largest component's outer boundary."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyMaskError("mask has no true pixels")
    labels, areas = connected_components(mask)
    largest = int(np.argmax(areas)) + 1
    contour = trace_outer_contour(labels == largest)
    hull = convex_hull_2d(contour)
    if len(hull) < 3:
        # thin component: return its extent as a degenerate hull
        return hull
    return hull


# ---------------------------------------------------------------------------
# polygons


def rasterize_polygon(poly: np.ndarray, width: int, height: int,
                      transform=None) -> np.ndarray:
    """Even-odd scanline fill with pixel-center sampling."""
    mask = np.zeros((height, width), dtype=bool)
    pts = np.asarray(poly, dtype=np.float64).reshape(-1, 2)
    if len(pts) < 3:
        return mask
    if transform is not None:
        if callable(transform):
            pts = np.asarray([transform(p) for p in pts], dtype=np.float64)
        else:
            matrix = np.asarray(transform, dtype=np.float64)
            pts = pts @ matrix[:2, :2].T + matrix[:2, 2]

    x1 = pts[:, 0]
    y1 = pts[:, 1]
    x2 = np.roll(x1, -1)
    y2 = np.roll(y1, -1)

    row_lo = max(0, int(math.floor(pts[:, 1].min() - 0.5)))
    row_hi = min(height - 1, int(math.ceil(pts[:, 1].max() + 0.5)))
    for row in range(row_lo, row_hi + 1):
        py = row + 0.5
        crossing = ((y1 <= py) & (py < y2)) | ((y2 <= py) & (py < y1))
        if not crossing.any():
            continue
        t = (py - y1[crossing]) / (y2[crossing] - y1[crossing])
        xs = np.sort(x1[crossing] + t * (x2[crossing] - x1[crossing]))
        for xa, xb in zip(xs[0::2], xs[1::2]):
            a = max(0, int(math.ceil(xa - 0.5)))
            b = min(width, int(math.ceil(xb - 0.5)))
            if b > a:
                mask[row, a:b] = True
    return mask


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return np.count_nonzero(a & b) / union


def polygon_iou(p: np.ndarray, q: np.ndarray, resolution: int = 1024) -> float:
    """Rasterized IoU on a shared grid with >= `resolution` px on the longer side."""
    p = np.asarray(p, dtype=np.float64).reshape(-1, 2)
    q = np.asarray(q, dtype=np.float64).reshape(-1, 2)
    if len(p) < 3 and len(q) < 3:
        return 0.0
    stack = np.vstack([pts for pts in (p, q) if len(pts) > 0])
    lo = stack.min(axis=0)
    hi = stack.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    scale = resolution / span.max()
    width = max(1, int(math.ceil(span[0] * scale)))
    height = max(1, int(math.ceil(span[1] * scale)))

    def to_grid(pts):
        return (pts - lo) * scale

    mask_p = rasterize_polygon(to_grid(p), width, height) if len(p) >= 3 else np.zeros((height, width), bool)
    mask_q = rasterize_polygon(to_grid(q), width, height) if len(q) >= 3 else np.zeros((height, width), bool)
    return mask_iou(mask_p, mask_q)


def polygon_area(poly: np.ndarray) -> float:
    pts = np.asarray(poly, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))


# ---------------------------------------------------------------------------
# quadrilateral fitting


@dataclass
class QuadFitParams:
    max_vertices: int = 10
    eps_init: float = 0.1
    eps_max: float = 0.4
    eps_step: float = 0.02
    margin: float = 0.0

    def __post_init__(self):
        if not 0 < self.eps_init <= self.eps_max:
            raise ArgumentError("need 0 < eps_init <= eps_max")

    def schedule(self) -> list[float]:
        values = []
        k = 0
        while True:
            eps = round(self.eps_init + k * self.eps_step, 10)
            if eps > self.eps_max + 1e-12:
                break
            values.append(eps)
            k += 1
        return values


@dataclass
class QuadFitDiagnostics:
    eps_schedule: list[float] = field(default_factory=list)
    eps_used: float | None = None
    source: str = ""          # "hull" | "padded" | "simplified" | "min_area_rect"
    candidate_ious: dict = field(default_factory=dict)


def _perpendicular_distance(point, start, end) -> float:
    line = end - start
    norm = np.hypot(*line)
    if norm < 1e-12:
        return float(np.hypot(*(point - start)))
    return abs(float(np.cross(line, point - start))) / norm


def _douglas_peucker(chain: np.ndarray, tol: float) -> np.ndarray:
    if len(chain) <= 2:
        return chain
    stack = [(0, len(chain) - 1)]
    keep = np.zeros(len(chain), dtype=bool)
    keep[0] = keep[-1] = True
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        distances = [_perpendicular_distance(chain[i], chain[lo], chain[hi])
                     for i in range(lo + 1, hi)]
        worst = int(np.argmax(distances)) + lo + 1
        if distances[worst - lo - 1] > tol:
            keep[worst] = True
            stack.append((lo, worst))
            stack.append((worst, hi))
    return chain[keep]


def _simplify_ring(ring: np.ndarray, tol: float) -> np.ndarray:
    """Douglas-Peucker on a closed ring, anchored at the farthest pair."""
    n = len(ring)
    best = (0, 1)
    best_d = -1.0
    for i in range(n):
        for j in range(i + 1, n):
            d = float(np.hypot(*(ring[i] - ring[j])))
            if d > best_d:
                best_d, best = d, (i, j)
    i, j = best
    chain_a = ring[i:j + 1]
    chain_b = np.vstack([ring[j:], ring[:i + 1]])
    simple_a = _douglas_peucker(chain_a, tol)
    simple_b = _douglas_peucker(chain_b, tol)
    return np.vstack([simple_a[:-1], simple_b[:-1]])


def order_corners(corners: np.ndarray) -> np.ndarray:
    """Counter-clockwise (positive signed area in x/y), starting top-left."""
    pts = np.asarray(corners, dtype=np.float64)
    centroid = pts.mean(axis=0)
    angles = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    pts = pts[np.argsort(angles)]
    start = int(np.argmin(pts.sum(axis=1)))
    return np.roll(pts, -start, axis=0)


def fit_quadrilateral_detailed(hull: np.ndarray, params: QuadFitParams | None = None,
                               iou_resolution: int = 512
                               ) -> tuple[np.ndarray, QuadFitDiagnostics]:
    """Fit the IoU-maximizing quadrilateral to a convex hull.

    Sweeps the polyline-simplification tolerance eps * perimeter over the
    configured schedule, stopping at the first epsilon that yields exactly
    4 vertices; the minimum-area rectangle always competes as a fallback
    candidate. Returns corners ordered counter-clockwise from top-left.
    """
    params = params or QuadFitParams()
    hull = np.asarray(hull, dtype=np.float64)
    if len(hull) < 3:
        raise DegenerateGeometryError(f"hull needs >= 3 points, got {len(hull)}")
    if polygon_area(hull) < 1e-12:
        raise DegenerateGeometryError("hull has zero area")

    diag = QuadFitDiagnostics(eps_schedule=params.schedule())

    if len(hull) == 3:
        # duplicate the farthest-pair midpoint to make a degenerate 4th corner
        pairs = [(0, 1), (1, 2), (2, 0)]
        far = max(pairs, key=lambda ij: np.hypot(*(hull[ij[0]] - hull[ij[1]])))
        midpoint = 0.5 * (hull[far[0]] + hull[far[1]])
        ring = []
        for k in range(3):
            ring.append(hull[k])
            if k == far[0] and (far[1] == (k + 1) % 3):
                ring.append(midpoint)
            elif far == (2, 0) and k == 2:
                ring.append(midpoint)
        diag.source = "padded"
        return order_corners(np.asarray(ring)), diag

    if len(hull) == 4:
        diag.source = "hull"
        return order_corners(hull), diag

    perimeter = float(np.sum(np.hypot(*((np.roll(hull, -1, axis=0) - hull).T))))
    candidates: list[tuple[str, float | None, np.ndarray]] = []
    for eps in diag.eps_schedule:
        simplified = _simplify_ring(hull, eps * perimeter)
        if len(simplified) == 4:
            candidates.append(("simplified", eps, simplified))
            break
        if len(simplified) < 4:
            break
    candidates.append(("min_area_rect", None, min_area_rect(hull)))

    best = None
    for source, eps, quad in candidates:
        iou = polygon_iou(quad, hull, resolution=iou_resolution)
        diag.candidate_ious[source] = iou
        if best is None or iou > best[0] + 1e-12:
            best = (iou, source, eps, quad)

    _, source, eps, quad = best
    diag.source = source
    diag.eps_used = eps
    return order_corners(quad), diag


def fit_quadrilateral(hull: np.ndarray, params: QuadFitParams | None = None) -> np.ndarray:
    corners, _ = fit_quadrilateral_detailed(hull, params)
    return corners


def prepare_mask_for_quadfit(mask: np.ndarray, blur_kernel: int = 25,
                             morph_kernel: int = 15) -> np.ndarray:
    """Blur, threshold, then close and open before contour extraction."""
    blurred = gaussian_blur(np.asarray(mask, dtype=np.float64), blur_kernel)
    binary = blurred >= 0.5
    closed = morphology(binary, "close", (morph_kernel, morph_kernel))
    return morphology(closed, "open", (morph_kernel, morph_kernel))


# ---------------------------------------------------------------------------
# homography


@dataclass(frozen=True)
class Homography:
    matrix: np.ndarray  # 3x3, h33 = 1

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if abs(m[2, 2]) > 1e-300:
            m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= 1e-12:
            raise DegenerateGeometryError("homography is singular")
        object.__setattr__(self, "matrix", m)

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        homogeneous = np.column_stack([pts, np.ones(len(pts))])
        mapped = homogeneous @ self.matrix.T
        return mapped[:, :2] / mapped[:, 2:3]

    def inverse(self) -> "Homography":
        return Homography(matrix=np.linalg.inv(self.matrix))


def _any_three_collinear(points: np.ndarray, tol: float = 1e-9) -> bool:
    span = max(1.0, float(np.ptp(points)))
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            for k in range(j + 1, len(points)):
                a, b, c = points[i], points[j], points[k]
                cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
                if abs(cross) < tol * span * span:
                    return True
    return False


def homography_from_points(src: np.ndarray, dst: np.ndarray) -> Homography:
    """Exact 4-point DLT, least-singular-vector solution, h33 = 1."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) != 4 or len(dst) != 4:
        raise ArgumentError("homography_from_points needs exactly 4 point pairs")
    if _any_three_collinear(src) or _any_three_collinear(dst):
        raise DegenerateGeometryError("three of the four points are collinear")
    system = np.zeros((8, 9))
    for i, ((x, y), (xp, yp)) in enumerate(zip(src, dst)):
        system[2 * i] = [x, y, 1, 0, 0, 0, -xp * x, -xp * y, -xp]
        system[2 * i + 1] = [0, 0, 0, x, y, 1, -yp * x, -yp * y, -yp]
    _, _, vt = np.linalg.svd(system)
    h = vt[-1].reshape(3, 3)
    return Homography(matrix=h)


def fit_homography_dlt(src: np.ndarray, dst: np.ndarray) -> Homography:
    """Least-squares DLT over n >= 4 pairs with Hartley normalization."""
    src = np.asarray(src, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst, dtype=np.float64).reshape(-1, 2)
    if len(src) < 4:
        raise ArgumentError("DLT needs at least 4 point pairs")

    def normalizer(pts):
        centroid = pts.mean(axis=0)
        spread = np.mean(np.linalg.norm(pts - centroid, axis=1))
        scale = math.sqrt(2.0) / max(spread, 1e-12)
        t = np.array([[scale, 0, -scale * centroid[0]],
                      [0, scale, -scale * centroid[1]],
                      [0, 0, 1.0]])
        return t

    t_src = normalizer(src)
    t_dst = normalizer(dst)
    src_n = np.column_stack([src, np.ones(len(src))]) @ t_src.T
    dst_n = np.column_stack([dst, np.ones(len(dst))]) @ t_dst.T

    system = np.zeros((2 * len(src), 9))
    for i in range(len(src)):
        x, y = src_n[i, 0], src_n[i, 1]
        xp, yp = dst_n[i, 0], dst_n[i, 1]
        system[2 * i] = [x, y, 1, 0, 0, 0, -xp * x, -xp * y, -xp]
        system[2 * i + 1] = [0, 0, 0, x, y, 1, -yp * x, -yp * y, -yp]
    _, _, vt = np.linalg.svd(system)
    h = vt[-1].reshape(3, 3)
    return Homography(matrix=np.linalg.inv(t_dst) @ h @ t_src)


def warp_perspective(image: np.ndarray, homography: Homography,
                     out_width: int, out_height: int) -> np.ndarray:
    """Inverse-mapped perspective warp with bilinear sampling; outside = 0."""
    from .panorama import bilinear_sample  # local import to avoid cycles

    inverse = homography.inverse().matrix
    xs = np.arange(out_width, dtype=np.float64)
    ys = np.arange(out_height, dtype=np.float64)
    grid_x, grid_y = np.meshgrid(xs, ys)
    denom = inverse[2, 0] * grid_x + inverse[2, 1] * grid_y + inverse[2, 2]
    denom = np.where(np.abs(denom) < 1e-12, 1e-12, denom)
    src_x = (inverse[0, 0] * grid_x + inverse[0, 1] * grid_y + inverse[0, 2]) / denom
    src_y = (inverse[1, 0] * grid_x + inverse[1, 1] * grid_y + inverse[1, 2]) / denom

    img = np.asarray(image)
    h, w = img.shape[:2]
    valid = (src_x >= -1e-6) & (src_x <= w - 1 + 1e-6) & \
            (src_y >= -1e-6) & (src_y <= h - 1 + 1e-6)
    sampled = bilinear_sample(img, np.clip(src_x, 0, w - 1), np.clip(src_y, 0, h - 1),
                              wrap_x=False)
    if sampled.ndim == 3:
        sampled[~valid] = 0
    else:
        sampled = np.where(valid, sampled, 0.0)
    if img.dtype == np.uint8:
        return np.clip(np.rint(sampled), 0, 255).astype(np.uint8)
    return sampled


# ---------------------------------------------------------------------------
# SSIM


def _valid_convolve_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    n = img.shape[axis] - len(kernel) + 1
    slicer = [slice(None)] * img.ndim
    out = None
    for i, weight in enumerate(kernel):
        slicer[axis] = slice(i, i + n)
        term = weight * img[tuple(slicer)]
        out = term if out is None else out + term
    return out


def _local_means(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    return _valid_convolve_axis(_valid_convolve_axis(img, kernel, 0), kernel, 1)


def ssim(a: np.ndarray, b: np.ndarray, window: int = 11,
         k1: float = 0.01, k2: float = 0.03, data_range: float = 255.0,
         sigma: float = 1.5) -> float:
    """Mean local SSIM over Gaussian-weighted windows fully inside the image."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ArgumentError(f"shape mismatch: {a.shape} vs {b.shape}")
    gray_a = to_grayscale(a)
    gray_b = to_grayscale(b)
    if min(gray_a.shape) < window:
        raise ArgumentError(f"image smaller than the {window}x{window} window")

    kernel = gaussian_kernel_1d(window, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    mu_a = _local_means(gray_a, kernel)
    mu_b = _local_means(gray_b, kernel)
    e_aa = _local_means(gray_a * gray_a, kernel)
    e_bb = _local_means(gray_b * gray_b, kernel)
    e_ab = _local_means(gray_a * gray_b, kernel)

    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b

    numerator = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(numerator / denominator))
