"""Volume overlap between cuboids.

Boxes share the gravity axis, so the intersection of two cuboids is the
intersection of their ground footprints times the overlap of their
vertical extents. Footprints live in the (x, z) plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Cuboid3D, cuboid_corners_camera, rotation_from_yaw

MERGE_EPS = 1e-9


@dataclass(frozen=True)
class ConvexPolygon2D:
    """Counter-clockwise convex polygon; an empty array means no area."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    @property
    def area(self) -> float:
        if self.is_empty:
            return 0.0
        return max(signed_area(self.vertices), 0.0)


def signed_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def iou_center_aligned(a, b) -> float:
    """IoU of two cuboids sharing center and orientation, from their (w, h, l)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    inter = float(np.prod(np.minimum(a, b)))
    union = float(np.prod(a)) + float(np.prod(b)) - inter
    return inter / union


def bev_footprint(c: Cuboid3D) -> ConvexPolygon2D:
    """Ground-plane rectangle of a cuboid, as (x, z) corners in CCW order."""
    half_l, half_w = c.l / 2, c.w / 2
    # CCW in the (x, z) plane; matches bottom vertices 3, 2, 1, 0.
    local = np.array([
        [-half_l, half_w],
        [-half_l, -half_w],
        [half_l, -half_w],
        [half_l, half_w],
    ])
    R = rotation_from_yaw(c.yaw)
    rot = np.array([[R[0, 0], R[0, 2]], [R[2, 0], R[2, 2]]])
    corners = local @ rot.T + np.array([c.location[0], c.location[2]])
    return ConvexPolygon2D(corners)


# Clipping runs on tuples of Python floats: polygons have at most eight
# vertices, where numpy's per-call overhead dominates.


def _clip_half_plane(poly: list, a, b) -> list:
    """Keep the part of ``poly`` left of the directed line a -> b."""
    if not poly:
        return poly
    ax, ay = a
    ex, ey = b[0] - ax, b[1] - ay

    out = []
    px, py = poly[-1]
    prev_side = ex * (py - ay) - ey * (px - ax)
    for cx, cy in poly:
        cur_side = ex * (cy - ay) - ey * (cx - ax)
        if cur_side >= 0:
            if prev_side < 0:
                t = prev_side / (prev_side - cur_side)
                out.append((px + t * (cx - px), py + t * (cy - py)))
            out.append((cx, cy))
        elif prev_side >= 0:
            t = prev_side / (prev_side - cur_side)
            out.append((px + t * (cx - px), py + t * (cy - py)))
        px, py, prev_side = cx, cy, cur_side
    return out


def _close(p, q) -> bool:
    return math.hypot(p[0] - q[0], p[1] - q[1]) < MERGE_EPS


def _merge_close(points: list) -> list:
    merged = []
    for p in points:
        if merged and _close(p, merged[-1]):
            continue
        merged.append(p)
    while len(merged) > 1 and _close(merged[0], merged[-1]):
        merged.pop()
    return merged


def _polygon_area(poly: list) -> float:
    total = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return 0.5 * total


def _intersection_points(p: list, q: list) -> list:
    poly = p
    n = len(q)
    for i in range(n):
        poly = _clip_half_plane(poly, q[i], q[(i + 1) % n])
        if not poly:
            return []
    poly = _merge_close(poly)
    if len(poly) < 3 or _polygon_area(poly) <= 0:
        return []
    return poly


def _as_points(poly: ConvexPolygon2D) -> list:
    return [(float(x), float(y)) for x, y in poly.vertices]


def polygon_intersection(p: ConvexPolygon2D, q: ConvexPolygon2D) -> ConvexPolygon2D:
    """Intersection of two convex CCW polygons by successive half-plane clipping."""
    if p.is_empty or q.is_empty:
        return ConvexPolygon2D(np.empty((0, 2)))
    poly = _intersection_points(_as_points(p), _as_points(q))
    if not poly:
        return ConvexPolygon2D(np.empty((0, 2)))
    return ConvexPolygon2D(np.array(poly))


def _footprint_points(c: Cuboid3D) -> list:
    """Same corners as :func:`bev_footprint`, as float tuples."""
    cos, sin = math.cos(c.yaw), math.sin(c.yaw)
    x, z = float(c.location[0]), float(c.location[2])
    half_l, half_w = c.l / 2, c.w / 2
    # rotation in the (x, z) plane: x' = cos*u + sin*v, z' = -sin*u + cos*v
    return [(x + cos * u + sin * v, z - sin * u + cos * v)
            for u, v in ((-half_l, half_w), (-half_l, -half_w), (half_l, -half_w), (half_l, half_w))]


def _footprint_overlap(a: Cuboid3D, b: Cuboid3D) -> float:
    first, second = sorted((a, b), key=_order_key)
    # Footprints whose circumscribed circles are apart cannot meet.
    reach = math.hypot(a.l, a.w) / 2 + math.hypot(b.l, b.w) / 2
    if math.hypot(a.location[0] - b.location[0], a.location[2] - b.location[2]) > reach:
        return 0.0
    poly = _intersection_points(_footprint_points(first), _footprint_points(second))
    return max(_polygon_area(poly), 0.0) if poly else 0.0


def _vertical_overlap(a: Cuboid3D, b: Cuboid3D) -> float:
    top = max(a.location[1] - a.h, b.location[1] - b.h)
    bottom = min(a.location[1], b.location[1])
    return max(bottom - top, 0.0)


def bev_iou(a: Cuboid3D, b: Cuboid3D) -> float:
    """Overlap of the ground footprints, ignoring height."""
    inter = _footprint_overlap(a, b)
    union = a.l * a.w + b.l * b.w - inter
    if inter <= 0 or union <= 0:
        return 0.0
    return inter / union


def iou_3d(a: Cuboid3D, b: Cuboid3D) -> float:
    """Volume IoU of two yaw-rotated cuboids."""
    dy = _vertical_overlap(a, b)
    if dy <= 0:
        return 0.0
    # Operands are ordered inside, so the result is bit-symmetric.
    inter = _footprint_overlap(a, b) * dy
    if inter <= 0:
        return 0.0
    union = a.volume + b.volume - inter
    return float(inter / union)


def _order_key(c: Cuboid3D):
    return (c.w, c.h, c.l, c.location, c.yaw)


def points_in_cuboid(points: np.ndarray, c: Cuboid3D) -> np.ndarray:
    """Boolean mask of camera-frame points lying inside the cuboid (boundary included)."""
    local = (np.asarray(points) - np.asarray(c.location)) @ rotation_from_yaw(c.yaw)
    return (
        (np.abs(local[:, 0]) <= c.l / 2)
        & (local[:, 1] <= 0)
        & (local[:, 1] >= -c.h)
        & (np.abs(local[:, 2]) <= c.w / 2)
    )


def _aabb(c: Cuboid3D):
    corners = cuboid_corners_camera(c)
    return corners.min(axis=0), corners.max(axis=0)


def iou_3d_monte_carlo(a: Cuboid3D, b: Cuboid3D, n: int, seed=0, chunk: int = 1_000_000) -> float:
    """Sampling estimate of :func:`iou_3d` over the joint axis-aligned bounding volume."""
    if n < 1:
        raise ValueError("n must be >= 1")
    lo_a, hi_a = _aabb(a)
    lo_b, hi_b = _aabb(b)
    lo = np.minimum(lo_a, lo_b)
    hi = np.maximum(hi_a, hi_b)
    rng = np.random.default_rng(seed)
    both = either = 0
    remaining = n
    while remaining > 0:
        m = min(remaining, chunk)
        pts = lo + rng.random((m, 3)) * (hi - lo)
        in_a = points_in_cuboid(pts, a)
        in_b = points_in_cuboid(pts, b)
        both += int(np.count_nonzero(in_a & in_b))
        either += int(np.count_nonzero(in_a | in_b))
        remaining -= m
    if either == 0:
        return 0.0
    return both / either
