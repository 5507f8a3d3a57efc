"""Seed location from a 2D box, and Gaussian candidate sampling around it.

The tight-constraint solver places a cuboid of known size and yaw so that
its projection touches all four sides of the detection box. Each side is
touched by one of the 8 corners; every assignment of corners to sides
gives 4 linear equations in the 3 unknowns of the location.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import AllSamplesDiscarded, InsufficientData, NoValidConfiguration
from .geometry import (
    CameraIntrinsics,
    Cuboid3D,
    Detection2D,
    ProjectedBox,
    cuboid_vertices,
    project_points,
    rotation_from_yaw,
)

EXCEED_TOLERANCE_PX = 1.0
SIGMA_MIN = 1e-3
MAX_CONDITION = 1e12

FULL_ASSIGNMENTS = np.array(list(itertools.product(range(8), repeat=4)), dtype=np.int64)


@dataclass(frozen=True)
class TightConstraintSolution:
    location: np.ndarray
    residual: float
    assignment: tuple  # corner index touching (x1, y1, x2, y2)
    degraded: bool = False

    def cuboid(self, dims, yaw) -> Cuboid3D:
        w, h, l = dims  # noqa: E741
        return Cuboid3D(w, h, l, tuple(self.location), yaw)


@dataclass(frozen=True)
class SamplingParams:
    mu: np.ndarray
    sigma: np.ndarray
    n_samples: int = 1024
    seed: int = 0

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(3)
        sigma = np.asarray(self.sigma, dtype=float).reshape(3)
        if np.any(sigma <= 0):
            raise ValueError("sampling sigmas must be positive")
        if int(self.n_samples) < 1:
            raise ValueError("n_samples must be >= 1")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "n_samples", int(self.n_samples))

    def replace(self, **changes) -> "SamplingParams":
        values = dict(mu=self.mu, sigma=self.sigma, n_samples=self.n_samples, seed=self.seed)
        values.update(changes)
        return SamplingParams(**values)


@dataclass
class Candidate:
    cuboid: Cuboid3D
    projection: ProjectedBox
    score: float | None = field(default=None)


# ---------------------------------------------------------------------------
# tight constraint


def pruned_assignments(corner_offsets: np.ndarray, det: Detection2D,
                       cam: CameraIntrinsics) -> np.ndarray:
    """64 plausible assignments for an upright box.

    The top side can only be touched by a roof corner and the bottom side by
    a floor corner. For the left and right sides the floor corners are ranked
    by lateral position across the viewing ray through the box center; the
    two leftmost may touch x1 and the two rightmost x2. A roof corner shares
    its column with the floor corner below it, so floor indices suffice.
    """
    u_center = (det.x1 + det.x2) / 2
    ray_x = (u_center - cam.cx) / cam.fx
    floor = corner_offsets[:4]
    lateral = floor[:, 0] - floor[:, 2] * ray_x
    order = np.argsort(lateral, kind="stable")
    left, right = sorted(order[:2]), sorted(order[-2:])
    combos = itertools.product(left, range(4, 8), right, range(4))
    return np.array(sorted(combos), dtype=np.int64)


def _edge_terms(P: np.ndarray, row: int, value: float, offsets: np.ndarray):
    """Coefficients a and per-corner constants c with ``a @ T + c = 0``."""
    coeff = P[row] - value * P[2]
    return coeff[:3], offsets @ coeff[:3] + coeff[3]


def solve_tight_constraint(dims, theta_global: float, det: Detection2D, cam: CameraIntrinsics,
                           mode: str = "full", exceed_tol: float = EXCEED_TOLERANCE_PX,
                           allow_degraded: bool = False) -> TightConstraintSolution:
    """Location whose projected box fits ``det`` tightly.

    Every corner-to-side assignment is solved by linear least squares. An
    assignment is dropped when the location is behind the camera or the
    projection sticks out of ``det`` by more than ``exceed_tol`` pixels.
    The survivor with the smallest pixel residual wins; ties go to the
    lexicographically first assignment. With ``allow_degraded`` the
    exceed test is waived if nothing survives it.
    """
    if not (det.x1 < det.x2 and det.y1 < det.y2):
        raise ValueError("detection box must have x1 < x2 and y1 < y2")
    w, h, l = (float(v) for v in dims)  # noqa: E741
    box = Cuboid3D(w, h, l, (0.0, 0.0, 0.0), theta_global)
    offsets = cuboid_vertices(box) @ rotation_from_yaw(box.yaw).T
    P = cam.K

    sides = [(0, det.x1), (1, det.y1), (0, det.x2), (1, det.y2)]
    terms = [_edge_terms(P, row, value, offsets) for row, value in sides]
    A = np.stack([a for a, _ in terms])
    if np.linalg.cond(A) > MAX_CONDITION:
        raise NoValidConfiguration("tight-constraint system is singular for this camera/box")

    if mode == "full":
        assignments = FULL_ASSIGNMENTS
    elif mode == "pruned":
        assignments = pruned_assignments(offsets, det, cam)
    else:
        raise ValueError(f"unknown enumeration mode {mode!r}")

    consts = np.stack([terms[s][1][assignments[:, s]] for s in range(4)], axis=1)
    T, *_ = np.linalg.lstsq(A, -consts.T, rcond=None)
    T = T.T  # (N, 3)

    uv, depth = project_points(offsets[None, :, :] + T[:, None, :], cam)
    rows = np.arange(len(assignments))
    touched = np.stack([
        uv[rows, assignments[:, 0], 0] - det.x1,
        uv[rows, assignments[:, 1], 1] - det.y1,
        uv[rows, assignments[:, 2], 0] - det.x2,
        uv[rows, assignments[:, 3], 1] - det.y2,
    ], axis=1)
    residual = np.linalg.norm(touched, axis=1)

    in_front = (T[:, 2] > 0) & np.all(depth > 0, axis=1)
    lo = uv.min(axis=1)
    hi = uv.max(axis=1)
    inside = (
        (lo[:, 0] >= det.x1 - exceed_tol)
        & (lo[:, 1] >= det.y1 - exceed_tol)
        & (hi[:, 0] <= det.x2 + exceed_tol)
        & (hi[:, 1] <= det.y2 + exceed_tol)
    )
    valid = in_front & inside
    degraded = False
    if not valid.any():
        if not (allow_degraded and in_front.any()):
            raise NoValidConfiguration("no corner assignment fits inside the detection box")
        valid = in_front
        degraded = True

    scored = np.where(valid & np.isfinite(residual), residual, np.inf)
    best = int(np.argmin(scored))
    if not np.isfinite(scored[best]):
        raise NoValidConfiguration("all surviving assignments have non-finite residuals")
    return TightConstraintSolution(
        location=T[best].copy(),
        residual=float(residual[best]),
        assignment=tuple(int(i) for i in assignments[best]),
        degraded=degraded,
    )


# ---------------------------------------------------------------------------
# sampling


def estimate_sampling_params(errors, n_samples: int = 1024, seed: int = 0,
                             sigma_min: float = SIGMA_MIN) -> SamplingParams:
    """Per-axis mean and sample standard deviation of localization errors."""
    errors = np.asarray(errors, dtype=float).reshape(-1, 3)
    if len(errors) < 2:
        raise InsufficientData("need at least two localization errors")
    mu = errors.mean(axis=0)
    sigma = np.maximum(errors.std(axis=0, ddof=1), sigma_min)
    return SamplingParams(mu=mu, sigma=sigma, n_samples=n_samples, seed=seed)


def draw_offsets(params: SamplingParams, n: int | None = None) -> np.ndarray:
    """Independent Gaussian translations, (n, 3), reproducible from ``params.seed``."""
    n = params.n_samples if n is None else n
    rng = np.random.default_rng(params.seed)
    return rng.normal(params.mu, params.sigma, size=(n, 3))


def visible_corner_counts(corners: np.ndarray, cam: CameraIntrinsics, image_size) -> np.ndarray:
    """Corners per box landing inside the image with positive depth; corners is (N, 8, 3)."""
    width, height = image_size
    uv, depth = project_points(corners, cam)
    inside = (
        (depth > 0)
        & (uv[..., 0] >= 0) & (uv[..., 0] < width)
        & (uv[..., 1] >= 0) & (uv[..., 1] < height)
    )
    return inside.sum(axis=-1)


def sample_candidates(seed_cuboid: Cuboid3D, params: SamplingParams, cam: CameraIntrinsics,
                      image_size) -> list:
    """Jitter the seed location and keep samples with at least half their corners in view."""
    offsets = draw_offsets(params)
    base = cuboid_vertices(seed_cuboid) @ rotation_from_yaw(seed_cuboid.yaw).T
    locations = np.asarray(seed_cuboid.location) + offsets
    corners = base[None, :, :] + locations[:, None, :]
    keep = visible_corner_counts(corners, cam, image_size) >= 4
    if not keep.any():
        raise AllSamplesDiscarded(f"all {len(offsets)} samples fell mostly outside the image")
    uv, depth = project_points(corners[keep], cam)
    w, h, l = seed_cuboid.dims  # noqa: E741
    return [
        Candidate(Cuboid3D(w, h, l, tuple(loc), seed_cuboid.yaw), ProjectedBox(uv[i], depth[i]))
        for i, loc in enumerate(locations[keep])
    ]
