"""Monocular 3D box fitting: projection geometry, tight-constraint seeding,
dense candidate sampling and scoring, and KITTI-style evaluation."""

from .errors import Mono3DError
from .geometry import (
    CameraIntrinsics,
    Cuboid3D,
    Detection2D,
    ProjectedBox,
    cuboid_vertices,
    project_cuboid,
    projected_hull_bbox,
    rotation_from_yaw,
    wrap_angle,
)
from .localization import (
    Candidate,
    SamplingParams,
    TightConstraintSolution,
    estimate_sampling_params,
    sample_candidates,
    solve_tight_constraint,
)
from .overlap import bev_footprint, iou_3d, iou_3d_monte_carlo, iou_center_aligned, polygon_intersection

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "Candidate",
    "Cuboid3D",
    "Detection2D",
    "Mono3DError",
    "ProjectedBox",
    "SamplingParams",
    "TightConstraintSolution",
    "bev_footprint",
    "cuboid_vertices",
    "estimate_sampling_params",
    "iou_3d",
    "iou_3d_monte_carlo",
    "iou_center_aligned",
    "polygon_intersection",
    "project_cuboid",
    "projected_hull_bbox",
    "rotation_from_yaw",
    "sample_candidates",
    "solve_tight_constraint",
    "wrap_angle",
]
