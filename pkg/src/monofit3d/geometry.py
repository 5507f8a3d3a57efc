"""Cuboid vertices, yaw rotation and pinhole projection.

Camera coordinates are x-right, y-down, z-forward. A cuboid's location is
the center of its bottom face, so the roof sits at ``y = Ty - h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCamera, DegenerateProjection

# Sign pattern of the 8 corners, in vertex order 0..7.
_X_SIGNS = np.array([1, 1, -1, -1, 1, 1, -1, -1], dtype=float)
_Y_ROOF = np.array([0, 0, 0, 0, 1, 1, 1, 1], dtype=float)
_Z_SIGNS = np.array([1, -1, -1, 1, 1, -1, -1, 1], dtype=float)

# Bottom ring, top ring, then verticals.
CUBOID_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 0),
    (4, 5), (5, 6), (6, 7), (7, 4),
    (0, 4), (1, 5), (2, 6), (3, 7),
)


def wrap_angle(theta):
    """Wrap an angle (or array of angles) into [-pi, pi)."""
    return (np.asarray(theta, dtype=float) + np.pi) % (2 * np.pi) - np.pi


def _wrap_scalar(theta: float) -> float:
    return float(wrap_angle(theta))


@dataclass(frozen=True)
class Cuboid3D:
    """A yaw-only 3D box: dimensions, bottom-center location, global yaw."""

    w: float
    h: float
    l: float  # noqa: E741
    location: tuple = (0.0, 0.0, 0.0)
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("w", "h", "l"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"cuboid dimension {name} must be positive, got {value}")
            object.__setattr__(self, name, value)
        loc = tuple(float(v) for v in np.asarray(self.location, dtype=float).reshape(3))
        object.__setattr__(self, "location", loc)
        yaw = float(self.yaw)
        if not np.isfinite(yaw):
            raise ValueError("yaw must be finite")
        if not -np.pi <= yaw <= np.pi:
            yaw = _wrap_scalar(yaw)
        object.__setattr__(self, "yaw", yaw)

    @property
    def dims(self) -> tuple:
        """Dimensions as (w, h, l)."""
        return (self.w, self.h, self.l)

    @property
    def volume(self) -> float:
        return self.w * self.h * self.l

    def moved(self, offset) -> "Cuboid3D":
        loc = np.asarray(self.location) + np.asarray(offset, dtype=float)
        return Cuboid3D(self.w, self.h, self.l, tuple(loc), self.yaw)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Full 3x4 projection matrix (KITTI ``P2``)."""

    K: np.ndarray = field(repr=False)

    def __post_init__(self):
        K = np.array(self.K, dtype=float).reshape(3, 4)
        if abs(K[2, 2] - 1.0) > 1e-9:
            raise ValueError(f"K[2][2] must be 1, got {K[2, 2]}")
        if K[0, 0] <= 0 or K[1, 1] <= 0:
            raise ValueError("focal lengths K[0][0] and K[1][1] must be positive")
        K.setflags(write=False)
        object.__setattr__(self, "K", K)

    @property
    def fx(self) -> float:
        return float(self.K[0, 0])

    @property
    def fy(self) -> float:
        return float(self.K[1, 1])

    @property
    def cx(self) -> float:
        return float(self.K[0, 2])

    @property
    def cy(self) -> float:
        return float(self.K[1, 2])

    def __eq__(self, other):
        return isinstance(other, CameraIntrinsics) and np.array_equal(self.K, other.K)

    def __hash__(self):
        return hash(self.K.tobytes())


@dataclass(frozen=True)
class Detection2D:
    """Axis-aligned image box in pixels, with an optional confidence."""

    x1: float
    y1: float
    x2: float
    y2: float
    score: float | None = None

    @property
    def box(self) -> tuple:
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def center(self) -> tuple:
        return ((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)


@dataclass(frozen=True)
class ProjectedBox:
    """Pixel coordinates (8, 2) and projective depths (8,) of a cuboid."""

    vertices: np.ndarray
    depths: np.ndarray

    @property
    def in_front(self) -> np.ndarray:
        return self.depths > 0


def cuboid_vertices(c: Cuboid3D) -> np.ndarray:
    """Object-frame corners as an (8, 3) array, before rotation and translation."""
    x = _X_SIGNS * (c.l / 2)
    y = -_Y_ROOF * c.h
    z = _Z_SIGNS * (c.w / 2)
    return np.stack([x, y, z], axis=1)


def rotation_from_yaw(theta: float) -> np.ndarray:
    """Rotation about the camera y axis."""
    cos, sin = np.cos(theta), np.sin(theta)
    return np.array([[cos, 0.0, sin], [0.0, 1.0, 0.0], [-sin, 0.0, cos]])


def cuboid_corners_camera(c: Cuboid3D) -> np.ndarray:
    """Corners in camera coordinates, (8, 3)."""
    return cuboid_vertices(c) @ rotation_from_yaw(c.yaw).T + np.asarray(c.location)


def project_points(points: np.ndarray, cam: CameraIntrinsics):
    """Project (..., 3) camera-frame points. Returns (uv, s) without dividing by zero checks."""
    pts = np.asarray(points, dtype=float)
    homo = pts @ cam.K[:, :3].T + cam.K[:, 3]
    s = homo[..., 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = homo[..., :2] / s[..., None]
    return uv, s


def project_cuboid(c: Cuboid3D, cam: CameraIntrinsics) -> ProjectedBox:
    """Project the 8 corners; vertices behind the camera keep a negative depth."""
    uv, s = project_points(cuboid_corners_camera(c), cam)
    if np.any(np.abs(s) < 1e-12):
        raise DegenerateProjection("a cuboid vertex lies on the camera principal plane")
    return ProjectedBox(vertices=uv, depths=s)


def projected_hull_bbox(p: ProjectedBox) -> tuple:
    """Enclosing rectangle (u_min, v_min, u_max, v_max) of the projected corners."""
    if np.any(np.asarray(p.depths) <= 0):
        raise BehindCamera("cannot bound a projection with vertices behind the camera")
    verts = np.asarray(p.vertices)
    lo = verts.min(axis=0)
    hi = verts.max(axis=0)
    return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def rect_iou(a, b) -> float:
    """IoU of two axis-aligned rectangles given as (x1, y1, x2, y2)."""
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    inter = max(ix, 0.0) * max(iy, 0.0)
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    union = area_a + area_b - inter
    if union <= 0:
        return 0.0
    return float(inter / union)
