"""Planar geometry helpers: axis-aligned rectangles, angle wrapping, quadrants.

All coordinates are meters in the workspace frame: x grows rightward,
y grows toward the top of the rendered image.
"""

from __future__ import annotations

import math

# A rect is (x0, y0, x1, y1) with x0 <= x1 and y0 <= y1.
Rect = tuple[float, float, float, float]


def rect_from_center(cx: float, cy: float, extent_x: float, extent_y: float) -> Rect:
    hx, hy = extent_x / 2.0, extent_y / 2.0
    return (cx - hx, cy - hy, cx + hx, cy + hy)


def rect_area(r: Rect) -> float:
    return max(0.0, r[2] - r[0]) * max(0.0, r[3] - r[1])


def rect_intersection_area(a: Rect, b: Rect) -> float:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def overlap_fraction(inner: Rect, outer: Rect) -> float:
    """Fraction of `inner`'s area covered by `outer` (0 when inner is degenerate)."""
    area = rect_area(inner)
    if area <= 0.0:
        return 0.0
    return rect_intersection_area(inner, outer) / area


def rect_contains_point(r: Rect, x: float, y: float) -> bool:
    return r[0] <= x <= r[2] and r[1] <= y <= r[3]


def rects_overlap(a: Rect, b: Rect, gap: float = 0.0) -> bool:
    """True if the rects (inflated by `gap` on each side) intersect with positive area."""
    return (
        a[0] - gap < b[2]
        and b[0] - gap < a[2]
        and a[1] - gap < b[3]
        and b[1] - gap < a[3]
    )


def wrap_angle(theta: float) -> float:
    """Wrap an angle to [-pi, pi)."""
    wrapped = math.fmod(theta + math.pi, 2.0 * math.pi)
    if wrapped < 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def yaw_error(a: float, b: float, period: float = 2.0 * math.pi) -> float:
    """Smallest signed difference a - b under rotational symmetry `period`."""
    d = math.fmod(a - b, period)
    if d < -period / 2.0:
        d += period
    elif d >= period / 2.0:
        d -= period
    return d


# Workspace quadrants, named from the top-down rendered view: "top" is the
# far edge (max y), "left" is x = 0.  The four rects tile the workspace.
AREA_NAMES = ("top-left", "top-right", "bottom-left", "bottom-right")


def area_rect(name: str, bounds_x: float, bounds_y: float) -> Rect:
    mx, my = bounds_x / 2.0, bounds_y / 2.0
    rects = {
        "top-left": (0.0, my, mx, bounds_y),
        "top-right": (mx, my, bounds_x, bounds_y),
        "bottom-left": (0.0, 0.0, mx, my),
        "bottom-right": (mx, 0.0, bounds_x, my),
    }
    if name not in rects:
        raise ValueError(f"unknown area name: {name!r}")
    return rects[name]
