"""Small geometry helpers shared by post-processing and shape features."""

from __future__ import annotations

import numpy as np


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull of (row, col) points in CCW order.

    Collinear inputs collapse to the two extreme points.
    """
    pts = np.asarray(points, dtype=np.float64)
    pts = np.unique(pts, axis=0)  # unique also sorts lexicographically
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=np.float64)


def rasterize_convex_polygon(hull: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Pixels whose centers lie inside (or on) a CCW convex polygon."""
    out = np.zeros(shape, dtype=bool)
    if len(hull) < 3:
        rr = np.round(hull[:, 0]).astype(int)
        cc = np.round(hull[:, 1]).astype(int)
        out[np.clip(rr, 0, shape[0] - 1), np.clip(cc, 0, shape[1] - 1)] = True
        return out
    r0 = max(int(np.floor(hull[:, 0].min())), 0)
    r1 = min(int(np.ceil(hull[:, 0].max())), shape[0] - 1)
    c0 = max(int(np.floor(hull[:, 1].min())), 0)
    c1 = min(int(np.ceil(hull[:, 1].max())), shape[1] - 1)
    rr, cc = np.meshgrid(np.arange(r0, r1 + 1), np.arange(c0, c1 + 1), indexing="ij")
    inside = np.ones(rr.shape, dtype=bool)
    for i in range(len(hull)):
        a = hull[i]
        b = hull[(i + 1) % len(hull)]
        cross = (b[0] - a[0]) * (cc - a[1]) - (b[1] - a[1]) * (rr - a[0])
        inside &= cross >= -1e-9
    out[r0 : r1 + 1, c0 : c1 + 1] = inside
    return out


def polygon_area(hull: np.ndarray) -> float:
    """Shoelace area of a simple polygon."""
    if len(hull) < 3:
        return 0.0
    x = hull[:, 1]
    y = hull[:, 0]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
