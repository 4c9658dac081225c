"""Line-segment extraction for rectification tiles.

Gradient-magnitude thresholding followed by a progressive probabilistic
Hough transform: edge points vote in a (rho, theta) accumulator in random
(seeded) order; once a bin passes the vote threshold, the supporting
pixels are walked along the line, un-voted, and emitted as a segment.
"""

from __future__ import annotations

import math

import numpy as np

from .imageproc import to_grayscale  # noqa: F401  (re-exported convenience)
from .panorama import LineSegment


def sobel_magnitude(gray: np.ndarray) -> np.ndarray:
    img = np.asarray(gray, dtype=np.float64)
    padded = np.pad(img, 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) * 2.0
    gx += padded[:-2, 2:] - padded[:-2, :-2]
    gx += padded[2:, 2:] - padded[2:, :-2]
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) * 2.0
    gy += padded[2:, :-2] - padded[:-2, :-2]
    gy += padded[2:, 2:] - padded[:-2, 2:]
    return np.hypot(gx, gy)


def detect_line_segments(gray: np.ndarray, magnitude_rel_threshold: float = 0.25,
                         vote_threshold: int = 40, min_length: float = 25.0,
                         max_gap: int = 3, seed: int = 0,
                         max_points: int = 20000,
                         max_segments: int = 200) -> list[LineSegment]:
    """Detect straight segments in a grayscale image."""
    magnitude = sobel_magnitude(gray)
    peak = float(magnitude.max())
    if peak <= 0:
        return []
    edges = magnitude >= magnitude_rel_threshold * peak
    h, w = edges.shape

    ys, xs = np.nonzero(edges)
    if len(xs) == 0:
        return []
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(xs))
    if len(order) > max_points:
        order = order[:max_points]

    thetas = np.deg2rad(np.arange(0.0, 180.0, 1.0))
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    diag = int(math.ceil(math.hypot(h, w)))
    n_rho = 2 * diag + 1
    acc = np.zeros((n_rho, len(thetas)), dtype=np.int32)

    remaining = edges.copy()
    segments: list[LineSegment] = []

    def rho_indices(x, y):
        return np.rint(x * cos_t + y * sin_t).astype(np.int64) + diag

    def walk(x0, y0, dx, dy):
        """Furthest supported pixel from (x0, y0) along (dx, dy)."""
        last = (x0, y0)
        gap = 0
        step = 1
        while True:
            x = int(round(x0 + dx * step))
            y = int(round(y0 + dy * step))
            if not (0 <= x < w and 0 <= y < h):
                break
            hit = False
            for ox, oy in ((0, 0), (int(round(dy)), int(round(-dx))),
                           (int(round(-dy)), int(round(dx)))):
                xx, yy = x + ox, y + oy
                if 0 <= xx < w and 0 <= yy < h and remaining[yy, xx]:
                    hit = True
                    last = (x, y)
                    break
            gap = 0 if hit else gap + 1
            if gap > max_gap:
                break
            step += 1
        return last

    def erase(x1, y1, x2, y2):
        """Un-vote and clear edge pixels within 1 px of the segment."""
        length = math.hypot(x2 - x1, y2 - y1)
        steps = max(1, int(round(length)))
        for i in range(steps + 1):
            x = int(round(x1 + (x2 - x1) * i / steps))
            y = int(round(y1 + (y2 - y1) * i / steps))
            for oy in (-1, 0, 1):
                for ox in (-1, 0, 1):
                    xx, yy = x + ox, y + oy
                    if 0 <= xx < w and 0 <= yy < h and remaining[yy, xx]:
                        remaining[yy, xx] = False
                        acc[rho_indices(xx, yy), np.arange(len(thetas))] -= 1

    for idx in order:
        x, y = int(xs[idx]), int(ys[idx])
        if not remaining[y, x]:
            continue
        rhos = rho_indices(x, y)
        acc[rhos, np.arange(len(thetas))] += 1
        votes = acc[rhos, np.arange(len(thetas))]
        best_theta = int(np.argmax(votes))
        if votes[best_theta] < vote_threshold:
            continue
        # line direction for theta: (-sin, cos)
        dx, dy = -sin_t[best_theta], cos_t[best_theta]
        end_a = walk(x, y, dx, dy)
        end_b = walk(x, y, -dx, -dy)
        seg = LineSegment(x1=float(end_b[0]), y1=float(end_b[1]),
                          x2=float(end_a[0]), y2=float(end_a[1]))
        erase(seg.x1, seg.y1, seg.x2, seg.y2)
        if seg.length >= min_length:
            segments.append(seg)
            if len(segments) >= max_segments:
                break
    return segments
