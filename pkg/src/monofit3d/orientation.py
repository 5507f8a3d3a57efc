"""Local orientation, global orientation and the viewing-ray angle.

The three angles are tied by ``ray = local - global`` (all wrapped). The
ray angle is positive for objects left of the image center and is modelled
as proportional to the horizontal pixel offset of the object center.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFit
from .geometry import CameraIntrinsics, Detection2D, wrap_angle

# Coefficient fitted on KITTI training labels, radians per pixel.
KITTI_RAY_COEFFICIENT = 0.0012408


@dataclass(frozen=True)
class RayCoefficient:
    k: float
    residual: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.k) or abs(self.k) >= 0.1:
            raise ValueError(f"implausible ray coefficient {self.k}")


@dataclass(frozen=True)
class OrientationTriple:
    theta_local: float
    theta_global: float
    theta_ray: float

    @classmethod
    def from_local_and_ray(cls, theta_local, theta_ray):
        return cls(float(wrap_angle(theta_local)), global_from_local(theta_local, theta_ray),
                   float(wrap_angle(theta_ray)))

    @classmethod
    def from_global_and_ray(cls, theta_global, theta_ray):
        return cls(local_from_global(theta_global, theta_ray), float(wrap_angle(theta_global)),
                   float(wrap_angle(theta_ray)))


def _coefficient(k) -> float:
    return k.k if isinstance(k, RayCoefficient) else float(k)


def center_offset(det: Detection2D, image_width: float, corners_u=None) -> float:
    """Pixels from the object center to the image center, positive on the left half.

    ``corners_u`` (the 8 projected corner columns) replaces the box center
    with the corner mean when given.
    """
    if corners_u is None:
        u = (det.x1 + det.x2) / 2
    else:
        u = float(np.mean(corners_u))
    return image_width / 2 - u


def ray_from_bbox(det: Detection2D, image_width: float, k=KITTI_RAY_COEFFICIENT,
                  corners_u=None) -> float:
    """Proportional approximation of the ray angle from a 2D box."""
    return _coefficient(k) * center_offset(det, image_width, corners_u)


def ray_from_bbox_exact(det: Detection2D, cam: CameraIntrinsics, corners_u=None) -> float:
    """Pinhole ray angle, ``atan2(cx - u, fx)``."""
    u = (det.x1 + det.x2) / 2 if corners_u is None else float(np.mean(corners_u))
    return float(np.arctan2(cam.cx - u, cam.fx))


def ray_from_location(location) -> float:
    """Ray angle of a camera-frame point; KITTI's ``alpha = ry + ray``."""
    return float(np.arctan2(-location[0], location[2]))


def global_from_local(theta_local: float, theta_ray: float) -> float:
    return float(wrap_angle(theta_local - theta_ray))


def local_from_global(theta_global: float, theta_ray: float) -> float:
    return float(wrap_angle(theta_global + theta_ray))


def fit_ray_coefficient(pairs) -> RayCoefficient:
    """Least-squares slope through the origin for (pixel offset, ray angle) pairs."""
    data = np.asarray(pairs, dtype=float).reshape(-1, 2)
    x, y = data[:, 0], data[:, 1]
    sxx = float(np.dot(x, x))
    if len(data) == 0 or sxx == 0.0:
        raise DegenerateFit("all center offsets are zero")
    k = float(np.dot(x, y)) / sxx
    residual = float(np.linalg.norm(y - k * x))
    return RayCoefficient(k=k, residual=residual)
