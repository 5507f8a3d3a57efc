"""Single-object 3D localization: tight-constraint seed, dense sampling, scoring."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .geometry import CameraIntrinsics, Cuboid3D, Detection2D, project_cuboid
from .localization import (
    Candidate,
    SamplingParams,
    TightConstraintSolution,
    sample_candidates,
    solve_tight_constraint,
)
from .scoring import Scorer, ScoringContext, pick_best

KITTI_IMAGE_SIZE = (1242, 375)


@dataclass(frozen=True)
class PipelineSettings:
    sampling: SamplingParams
    enum_mode: str = "full"
    image_size: tuple = KITTI_IMAGE_SIZE
    exceed_tol: float = 1.0
    # The seed location competes with the samples, so a scorer can keep it.
    include_seed: bool = True


@dataclass(frozen=True)
class LocalizationResult:
    cuboid: Cuboid3D
    score: float
    seed: TightConstraintSolution
    seed_cuboid: Cuboid3D
    n_candidates: int


def object_seed(base_seed: int, image_id: str, index: int) -> int:
    """Stable per-object RNG seed, independent of processing order."""
    key = zlib.crc32(str(image_id).encode())
    return int(np.random.SeedSequence([int(base_seed), key, int(index)]).generate_state(1)[0])


def localize(dims, theta_global: float, det: Detection2D, cam: CameraIntrinsics,
             scorer: Scorer, context: ScoringContext, settings: PipelineSettings,
             seed: int | None = None) -> LocalizationResult:
    """Place a box of known size and yaw behind ``det`` and return the best-scoring candidate."""
    solution = solve_tight_constraint(dims, theta_global, det, cam, mode=settings.enum_mode,
                                      exceed_tol=settings.exceed_tol, allow_degraded=True)
    seed_cuboid = solution.cuboid(dims, theta_global)
    params = settings.sampling if seed is None else settings.sampling.replace(seed=seed)
    candidates = sample_candidates(seed_cuboid, params, cam, settings.image_size)
    if settings.include_seed and np.all(project_cuboid(seed_cuboid, cam).depths > 0):
        candidates.insert(0, Candidate(seed_cuboid, project_cuboid(seed_cuboid, cam)))
    best = pick_best(candidates, scorer, context)
    return LocalizationResult(best.cuboid, best.score, solution, seed_cuboid, len(candidates))
