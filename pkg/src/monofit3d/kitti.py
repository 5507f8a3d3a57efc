"""KITTI object labels, calibration files and difficulty levels.

Label lines hold 15 fields (ground truth) or 16 (detections, with a
trailing score)::

    type truncated occluded alpha x1 y1 x2 y2 h w l x y z rotation_y [score]

Files store dimensions as (h, w, l); :class:`Cuboid3D` uses (w, h, l).
The swap happens only in :func:`label_to_cuboid` and :func:`label_from_cuboid`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import MalformedLine, MissingP2, MissingScore
from .geometry import CameraIntrinsics, Cuboid3D, Detection2D

DONT_CARE = "DontCare"


@dataclass(frozen=True)
class ObjectLabel:
    class_name: str
    truncated: float
    occluded: int
    alpha: float
    bbox: Detection2D
    dims: tuple  # (h, w, l), file order
    location: tuple
    rotation_y: float
    score: float | None = None

    @property
    def is_dont_care(self) -> bool:
        return self.class_name == DONT_CARE

    @property
    def bbox_height(self) -> float:
        return self.bbox.y2 - self.bbox.y1

    def with_score(self, score) -> "ObjectLabel":
        bbox = replace(self.bbox, score=score)
        return replace(self, score=score, bbox=bbox)


class Difficulty(enum.IntEnum):
    EASY = 0
    MODERATE = 1
    HARD = 2
    IGNORED = 3

    @classmethod
    def parse(cls, name) -> "Difficulty":
        if isinstance(name, (Difficulty, int)):
            return cls(name)
        return cls[str(name).upper()]


@dataclass(frozen=True)
class DifficultyThresholds:
    """Per level: minimum box height, maximum occlusion, maximum truncation."""

    min_height: tuple = (40.0, 25.0, 25.0)
    max_occlusion: tuple = (0, 1, 2)
    max_truncation: tuple = (0.15, 0.30, 0.50)


KITTI_THRESHOLDS = DifficultyThresholds()


def _number(token: str, index: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise MalformedLine(f"field {index} is not a number: {token!r}", field_index=index) from None


def parse_label_line(line: str) -> ObjectLabel:
    fields = line.split()
    if len(fields) not in (15, 16):
        raise MalformedLine(f"expected 15 or 16 fields, got {len(fields)}", field_index=len(fields))
    values = [_number(tok, i) for i, tok in enumerate(fields[1:], start=1)]
    occluded = values[1]
    if occluded != int(occluded):
        raise MalformedLine(f"occlusion must be an integer, got {fields[2]!r}", field_index=2)
    score = values[14] if len(fields) == 16 else None
    return ObjectLabel(
        class_name=fields[0],
        truncated=values[0],
        occluded=int(occluded),
        alpha=values[2],
        bbox=Detection2D(*values[3:7], score=score),
        dims=tuple(values[7:10]),
        location=tuple(values[10:13]),
        rotation_y=values[13],
        score=score,
    )


def serialize_label(obj: ObjectLabel, precision: int | None = 2) -> str:
    """One label line. ``precision=None`` writes shortest round-trip floats."""

    def fmt(v):
        return repr(float(v)) if precision is None else f"{v:.{precision}f}"

    fields = [obj.class_name, fmt(obj.truncated), str(int(obj.occluded)), fmt(obj.alpha)]
    fields += [fmt(v) for v in obj.bbox.box]
    fields += [fmt(v) for v in obj.dims]
    fields += [fmt(v) for v in obj.location]
    fields.append(fmt(obj.rotation_y))
    if obj.score is not None:
        fields.append(fmt(obj.score) if precision is None else f"{obj.score:.{max(precision, 4)}f}")
    return " ".join(fields)


def parse_label_text(text: str) -> list:
    return [parse_label_line(ln) for ln in text.splitlines() if ln.strip()]


def read_label_file(path) -> list:
    return parse_label_text(Path(path).read_text())


def write_label_file(path, labels, precision: int | None = 2) -> None:
    lines = [serialize_label(obj, precision) for obj in labels]
    Path(path).write_text("".join(ln + "\n" for ln in lines))


def read_label_dir(directory) -> dict:
    """Map image id (file stem) to its labels, ids in sorted order."""
    directory = Path(directory)
    return {p.stem: read_label_file(p) for p in sorted(directory.glob("*.txt"))}


def parse_calibration(text: str) -> CameraIntrinsics:
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("P2:"):
            values = line[3:].split()
            if len(values) != 12:
                raise MissingP2(f"P2 has {len(values)} values, expected 12")
            return CameraIntrinsics(np.array([float(v) for v in values]).reshape(3, 4))
    raise MissingP2("calibration text has no 'P2:' line")


def read_calibration(path) -> CameraIntrinsics:
    return parse_calibration(Path(path).read_text())


def format_calibration(cam: CameraIntrinsics) -> str:
    return "P2: " + " ".join(repr(float(v)) for v in cam.K.reshape(-1)) + "\n"


def qualifies(obj: ObjectLabel, level, thresholds: DifficultyThresholds = KITTI_THRESHOLDS) -> bool:
    level = Difficulty.parse(level)
    if level == Difficulty.IGNORED:
        return True
    return (obj.bbox_height >= thresholds.min_height[level]
            and obj.occluded <= thresholds.max_occlusion[level]
            and obj.truncated <= thresholds.max_truncation[level])


def classify_difficulty(obj: ObjectLabel,
                        thresholds: DifficultyThresholds = KITTI_THRESHOLDS) -> Difficulty:
    """Strictest level the object qualifies for."""
    for level in (Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD):
        if qualifies(obj, level, thresholds):
            return level
    return Difficulty.IGNORED


def score_filter(dets, threshold: float = 0.1) -> list:
    kept = []
    for det in dets:
        if det.score is None:
            raise MissingScore(f"detection of class {det.class_name!r} has no score")
        if det.score >= threshold:
            kept.append(det)
    return kept


def label_to_cuboid(obj: ObjectLabel) -> Cuboid3D:
    h, w, l = obj.dims  # noqa: E741
    return Cuboid3D(w, h, l, obj.location, obj.rotation_y)


def label_from_cuboid(c: Cuboid3D, bbox: Detection2D, alpha: float, class_name: str = "Car",
                      score: float | None = None, truncated: float = 0.0,
                      occluded: int = 0) -> ObjectLabel:
    return ObjectLabel(
        class_name=class_name,
        truncated=truncated,
        occluded=occluded,
        alpha=alpha,
        bbox=replace(bbox, score=score),
        dims=(c.h, c.w, c.l),
        location=tuple(c.location),
        rotation_y=c.yaw,
        score=score,
    )
