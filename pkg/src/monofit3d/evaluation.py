"""Detection metrics: AP over 2D/BEV/3D overlap, AOS, dimension error.

Matching is greedy per image: detections are visited by descending score
and each takes the unmatched ground truth it overlaps most, provided the
overlap reaches the threshold. Ground truths that fail the difficulty
filter, neighbouring classes (Van for Car) and DontCare regions absorb
detections without producing true or false positives.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, MissingScore
from .geometry import rect_iou, wrap_angle
from .kitti import (
    KITTI_THRESHOLDS,
    Difficulty,
    DifficultyThresholds,
    ObjectLabel,
    label_to_cuboid,
    qualifies,
)
from .overlap import bev_iou, iou_3d

NEIGHBOR_CLASSES = {"Car": ("Van",), "Pedestrian": ("Person_sitting",)}
OVERLAP_KINDS = ("2d", "bev", "3d")


@dataclass(frozen=True)
class MatchConfig:
    overlap_kind: str = "2d"
    iou_threshold: float = 0.7
    difficulty: Difficulty = Difficulty.MODERATE
    class_name: str = "Car"
    thresholds: DifficultyThresholds = KITTI_THRESHOLDS

    def __post_init__(self):
        kind = self.overlap_kind.lower()
        if kind not in OVERLAP_KINDS:
            raise ValueError(f"overlap_kind must be one of {OVERLAP_KINDS}")
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError("iou_threshold must lie in (0, 1)")
        object.__setattr__(self, "overlap_kind", kind)
        object.__setattr__(self, "difficulty", Difficulty.parse(self.difficulty))


@dataclass(frozen=True)
class PRPoint:
    recall: float
    precision: float
    orientation_similarity: float


@dataclass
class FrameMatch:
    """Per-detection outcome for one image.

    ``status`` follows the input order: "tp", "fp", "ignored", or "other"
    for detections of a different class.
    """

    status: list
    scores: np.ndarray
    similarity: np.ndarray
    pairs: list = field(default_factory=list)  # (det index, gt index)
    n_gt: int = 0

    @property
    def n_tp(self) -> int:
        return self.status.count("tp")

    @property
    def n_fp(self) -> int:
        return self.status.count("fp")


@dataclass(frozen=True)
class EvalResult:
    ap: float
    aos: float
    n_gt: int
    pr: list


def overlap(det: ObjectLabel, gt: ObjectLabel, kind: str) -> float:
    if kind == "2d":
        return rect_iou(det.bbox.box, gt.bbox.box)
    if kind == "bev":
        return bev_iou(label_to_cuboid(det), label_to_cuboid(gt))
    if kind == "3d":
        return iou_3d(label_to_cuboid(det), label_to_cuboid(gt))
    raise ValueError(f"unknown overlap kind {kind!r}")


def _covered_by_region(det: ObjectLabel, region: ObjectLabel) -> float:
    """Fraction of the detection's 2D box inside a DontCare region."""
    a, b = det.bbox.box, region.bbox.box
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    area = (a[2] - a[0]) * (a[3] - a[1])
    if ix <= 0 or iy <= 0 or area <= 0:
        return 0.0
    return ix * iy / area


def match_detections(dets, gts, cfg: MatchConfig) -> FrameMatch:
    """Greedy score-ordered matching of one image's detections to its ground truth."""
    status = ["other"] * len(dets)
    similarity = np.zeros(len(dets))
    scores = np.full(len(dets), -np.inf)
    neighbors = NEIGHBOR_CLASSES.get(cfg.class_name, ())

    valid, ignored, regions = [], [], []
    for j, g in enumerate(gts):
        if g.is_dont_care:
            regions.append(g)
        elif g.class_name == cfg.class_name and qualifies(g, cfg.difficulty, cfg.thresholds):
            valid.append(j)
        elif g.class_name == cfg.class_name or g.class_name in neighbors:
            ignored.append(j)

    own = [i for i, d in enumerate(dets) if d.class_name == cfg.class_name]
    for i in own:
        if dets[i].score is None:
            raise MissingScore(f"detection {i} has no score")
        scores[i] = dets[i].score
    order = sorted(own, key=lambda i: -dets[i].score)

    taken = set()
    pairs = []
    thr = cfg.iou_threshold
    for i in order:
        best_j, best_o = None, -1.0
        for j in valid:
            if j in taken:
                continue
            o = overlap(dets[i], gts[j], cfg.overlap_kind)
            if o >= thr and o > best_o:
                best_j, best_o = j, o
        if best_j is not None:
            taken.add(best_j)
            pairs.append((i, best_j))
            status[i] = "tp"
            delta = wrap_angle(dets[i].alpha - gts[best_j].alpha)
            similarity[i] = (1.0 + np.cos(delta)) / 2.0
        elif any(overlap(dets[i], gts[j], cfg.overlap_kind) >= thr for j in ignored) or any(
            _covered_by_region(dets[i], r) >= thr for r in regions
        ):
            status[i] = "ignored"
        else:
            status[i] = "fp"
    return FrameMatch(status=status, scores=scores, similarity=similarity, pairs=pairs,
                      n_gt=len(valid))


def precision_recall(matches) -> tuple:
    """PR points over all images, one per scored detection; returns (points, n_gt)."""
    n_gt = sum(m.n_gt for m in matches)
    scores, tps, sims = [], [], []
    for m in matches:
        for st, sc, sim in zip(m.status, m.scores, m.similarity):
            if st in ("tp", "fp"):
                scores.append(sc)
                tps.append(st == "tp")
                sims.append(sim)
    if not scores or n_gt == 0:
        return [], n_gt
    order = np.argsort(-np.asarray(scores), kind="stable")
    tp = np.asarray(tps, dtype=float)[order]
    sim = np.asarray(sims)[order]
    ctp = np.cumsum(tp)
    count = np.arange(1, len(tp) + 1)
    precision = ctp / count
    recall = ctp / n_gt
    osim = np.cumsum(sim) / count
    points = [PRPoint(float(r), float(p), float(s)) for r, p, s in zip(recall, precision, osim)]
    return points, n_gt


def recall_grid(n_points: int = 11) -> np.ndarray:
    if n_points == 11:
        return np.linspace(0.0, 1.0, 11)
    if n_points == 40:
        return np.linspace(1.0 / 40, 1.0, 40)
    raise ValueError("interpolation must use 11 or 40 points")


def _interpolated(pr, values, n_points) -> float:
    if not pr:
        return 0.0
    recall = np.array([p.recall for p in pr])
    values = np.asarray(values, dtype=float)
    total = 0.0
    for r in recall_grid(n_points):
        mask = recall >= r - 1e-12
        total += values[mask].max() if mask.any() else 0.0
    return total / len(recall_grid(n_points))


def average_precision(pr, n_points: int = 11) -> float:
    """Interpolated AP: mean over the recall grid of the best precision at or beyond it."""
    return _interpolated(pr, [p.precision for p in pr], n_points)


def average_orientation_similarity_from_pr(pr, n_points: int = 11) -> float:
    return _interpolated(pr, [p.orientation_similarity for p in pr], n_points)


def _frames(frames):
    if isinstance(frames, dict):
        return [frames[k] for k in sorted(frames)]
    return list(frames)


def evaluate(frames, cfg: MatchConfig, n_points: int = 11) -> EvalResult:
    """AP and AOS over ``frames``, a list (or id-keyed dict) of (dets, gts) pairs."""
    matches = [match_detections(d, g, cfg) for d, g in _frames(frames)]
    pr, n_gt = precision_recall(matches)
    return EvalResult(
        ap=average_precision(pr, n_points),
        aos=average_orientation_similarity_from_pr(pr, n_points),
        n_gt=n_gt,
        pr=pr,
    )


def average_orientation_similarity(frames, cfg: MatchConfig, n_points: int = 11) -> float:
    return evaluate(frames, cfg, n_points).aos


def _with_kind(cfg, kind, iou_threshold):
    return MatchConfig(kind, cfg.iou_threshold if iou_threshold is None else iou_threshold,
                       cfg.difficulty, cfg.class_name, cfg.thresholds)


def evaluate_2d(frames, cfg: MatchConfig = MatchConfig(), iou_threshold=None, n_points=11):
    return evaluate(frames, _with_kind(cfg, "2d", iou_threshold), n_points).ap


def evaluate_bev(frames, cfg: MatchConfig = MatchConfig(), iou_threshold=None, n_points=11):
    return evaluate(frames, _with_kind(cfg, "bev", iou_threshold), n_points).ap


def evaluate_3d(frames, cfg: MatchConfig = MatchConfig(), iou_threshold=None, n_points=11):
    return evaluate(frames, _with_kind(cfg, "3d", iou_threshold), n_points).ap


# ---------------------------------------------------------------------------
# dimension error


def dimension_errors(dets, gts, class_name: str | None = None) -> np.ndarray:
    """Per-detection dimension error against the ground truth with the nearest center."""
    dets = [d for d in dets if not d.is_dont_care and (class_name is None or d.class_name == class_name)]
    gts = [g for g in gts if not g.is_dont_care and (class_name is None or g.class_name == class_name)]
    if not dets or not gts:
        raise EmptyInput("dimension error needs at least one detection and one ground truth")
    gt_centers = np.array([g.location for g in gts], dtype=float)
    gt_dims = np.array([g.dims for g in gts], dtype=float)
    errors = []
    for d in dets:
        j = int(np.argmin(np.linalg.norm(gt_centers - np.asarray(d.location), axis=1)))
        errors.append(float(np.linalg.norm(np.asarray(d.dims) - gt_dims[j])))
    return np.array(errors)


def dimension_error(dets, gts, class_name: str | None = None) -> float:
    """Mean Euclidean dimension error."""
    return float(dimension_errors(dets, gts, class_name).mean())


def dimension_error_frames(frames, class_name: str | None = "Car") -> float:
    errors = []
    for dets, gts in _frames(frames):
        try:
            errors.append(dimension_errors(dets, gts, class_name))
        except EmptyInput:
            continue
    if not errors:
        raise EmptyInput("no image has both detections and ground truth")
    return float(np.concatenate(errors).mean())


# ---------------------------------------------------------------------------
# report

REPORT_COLUMNS = ("difficulty", "overlap", "iou_threshold", "ap", "aos", "dimension_error")
DEFAULT_REPORT_ROWS = (("2d", 0.7), ("bev", 0.5), ("bev", 0.7), ("3d", 0.5), ("3d", 0.7))


def evaluation_report(frames, class_name: str = "Car", rows=DEFAULT_REPORT_ROWS,
                      difficulties=(Difficulty.EASY, Difficulty.MODERATE, Difficulty.HARD),
                      n_points: int = 11) -> list:
    frames = _frames(frames)
    try:
        e_a = dimension_error_frames(frames, class_name)
    except EmptyInput:
        e_a = float("nan")
    report = []
    for level in difficulties:
        for kind, thr in rows:
            res = evaluate(frames, MatchConfig(kind, thr, level, class_name), n_points)
            report.append({
                "difficulty": Difficulty.parse(level).name.capitalize(),
                "overlap": kind,
                "iou_threshold": thr,
                "ap": res.ap,
                "aos": res.aos,
                "dimension_error": e_a,
            })
    return report


def format_report_csv(report) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in report:
        writer.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
