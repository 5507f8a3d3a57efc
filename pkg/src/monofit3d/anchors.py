"""Anchor cuboids and anchor angles: clustering, losses, decoding.

A regressor emits, per anchor, a confidence logit and an offset. The
decoded estimate is the most confident anchor plus its offset. Losses work
on a single object; averaging over a batch is left to the caller.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import log_softmax
from scipy.special import softmax as _softmax

from .errors import InsufficientData, NonPositiveDimension
from .geometry import wrap_angle
from .overlap import iou_center_aligned

DEFAULT_NUM_DIMENSION_ANCHORS = 4
DEFAULT_NUM_ANGLE_ANCHORS = 2


@dataclass(frozen=True)
class DimensionAnchorSet:
    anchors: np.ndarray  # (K, 3) as (w, h, l)

    def __post_init__(self):
        a = np.array(self.anchors, dtype=float).reshape(-1, 3)
        if len(a) < 1:
            raise ValueError("need at least one dimension anchor")
        if np.any(a <= 0):
            raise ValueError("anchor dimensions must be positive")
        if len(np.unique(a, axis=0)) != len(a):
            raise ValueError("dimension anchors must be distinct")
        a.setflags(write=False)
        object.__setattr__(self, "anchors", a)

    def __len__(self):
        return len(self.anchors)


@dataclass(frozen=True)
class AngleAnchorSet:
    anchors: np.ndarray  # (K',) radians in [-pi, pi)

    def __post_init__(self):
        a = wrap_angle(np.array(self.anchors, dtype=float).reshape(-1))
        if len(a) < 1:
            raise ValueError("need at least one angle anchor")
        d = circular_distance(a[:, None], a[None, :])
        np.fill_diagonal(d, np.inf)
        if np.any(d <= 1e-6):
            raise ValueError("angle anchors must be pairwise distinct")
        a.setflags(write=False)
        object.__setattr__(self, "anchors", a)

    def __len__(self):
        return len(self.anchors)


@dataclass(frozen=True)
class DimensionPrediction:
    confidences: np.ndarray  # (K,) logits
    offsets: np.ndarray  # (K, 3) as (dw, dh, dl)

    def __post_init__(self):
        c = np.asarray(self.confidences, dtype=float).reshape(-1)
        o = np.asarray(self.offsets, dtype=float).reshape(-1, 3)
        if len(c) != len(o):
            raise ValueError("confidences and offsets must have equal length")
        object.__setattr__(self, "confidences", c)
        object.__setattr__(self, "offsets", o)


@dataclass(frozen=True)
class AnglePrediction:
    confidences: np.ndarray  # (K',) logits
    offsets: np.ndarray  # (K',) radians

    def __post_init__(self):
        c = np.asarray(self.confidences, dtype=float).reshape(-1)
        o = np.asarray(self.offsets, dtype=float).reshape(-1)
        if len(c) != len(o):
            raise ValueError("confidences and offsets must have equal length")
        object.__setattr__(self, "confidences", c)
        object.__setattr__(self, "offsets", o)


def circular_distance(a, b):
    return np.abs(wrap_angle(np.asarray(a) - np.asarray(b)))


def circular_mean(angles) -> float:
    angles = np.asarray(angles, dtype=float)
    return float(wrap_angle(np.arctan2(np.sin(angles).mean(), np.cos(angles).mean())))


# ---------------------------------------------------------------------------
# k-means


def _farthest_point_init(points, k, rng, dist):
    first = int(rng.integers(len(points)))
    chosen = [first]
    nearest = dist(points, points[first])
    for _ in range(1, k):
        nxt = int(np.argmax(nearest))
        chosen.append(nxt)
        nearest = np.minimum(nearest, dist(points, points[nxt]))
    return points[chosen].copy()


def _lloyd(samples, centers, dist, mean, max_iters):
    k = len(centers)
    labels = None
    for _ in range(max_iters):
        d = np.stack([dist(samples, c) for c in centers], axis=1)
        new_labels = np.argmin(d, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = samples[labels == j]
            if len(members):
                centers[j] = mean(members)
            else:
                # Re-seed from the sample worst served by its current center.
                worst = int(np.argmax(d[np.arange(len(samples)), labels]))
                centers[j] = samples[worst]
                labels[worst] = j
    return centers


def _euclidean(points, center):
    return np.linalg.norm(points - center, axis=-1)


def kmeans_dimensions(samples, k: int = DEFAULT_NUM_DIMENSION_ANCHORS, seed=0,
                      max_iters: int = 100) -> DimensionAnchorSet:
    """Cluster (w, h, l) triples into ``k`` anchor cuboids."""
    samples = np.asarray(samples, dtype=float).reshape(-1, 3)
    distinct = np.unique(samples, axis=0)
    if len(samples) == 0 or k > len(distinct):
        raise InsufficientData(f"cannot form {k} clusters from {len(distinct)} distinct samples")
    rng = np.random.default_rng(seed)
    centers = _farthest_point_init(distinct, k, rng, _euclidean)
    centers = _lloyd(samples, centers, _euclidean, lambda m: m.mean(axis=0), max_iters)
    return DimensionAnchorSet(centers)


def kmeans_angles(samples, k: int = DEFAULT_NUM_ANGLE_ANCHORS, seed=0,
                  max_iters: int = 100) -> AngleAnchorSet:
    """Cluster angles under circular distance; centers are circular means."""
    samples = wrap_angle(np.asarray(samples, dtype=float).reshape(-1))
    distinct = np.unique(samples)
    if len(samples) == 0 or k > len(distinct):
        raise InsufficientData(f"cannot form {k} clusters from {len(distinct)} distinct angles")
    rng = np.random.default_rng(seed)
    centers = _farthest_point_init(distinct, k, rng, circular_distance)
    centers = _lloyd(samples, centers, circular_distance, circular_mean, max_iters)
    return AngleAnchorSet(centers)


# ---------------------------------------------------------------------------
# losses and decoding


def softmax(confidences) -> np.ndarray:
    return _softmax(np.asarray(confidences, dtype=float))


def best_anchor_dimension(anchors: DimensionAnchorSet, gt) -> int:
    """Index of the anchor with the largest center-aligned IoU to ``gt``; ties go low."""
    ious = [iou_center_aligned(a, gt) for a in anchors.anchors]
    return int(np.argmax(ious))


def nearest_anchor_angle(anchors: AngleAnchorSet, theta: float) -> int:
    return int(np.argmin(circular_distance(anchors.anchors, theta)))


def _clamped_iou(dims, gt) -> float:
    # A decoded box with a non-positive side has no volume and no overlap.
    dims = np.asarray(dims, dtype=float)
    if np.any(dims <= 0):
        return 0.0
    return iou_center_aligned(dims, gt)


def dimension_loss(pred: DimensionPrediction, anchors: DimensionAnchorSet, gt) -> float:
    """Classification term on the best anchor plus one minus the decoded-box IoU."""
    if len(pred.confidences) != len(anchors):
        raise ValueError("prediction and anchor set sizes differ")
    i = best_anchor_dimension(anchors, gt)
    cls_term = -float(log_softmax(pred.confidences)[i])
    decoded = anchors.anchors[i] + pred.offsets[i]
    return cls_term + (1.0 - _clamped_iou(decoded, gt))


def orientation_loss(pred: AnglePrediction, anchors: AngleAnchorSet, gt_theta: float) -> float:
    """Classification term on the nearest anchor plus a cosine offset penalty."""
    if len(pred.confidences) != len(anchors):
        raise ValueError("prediction and anchor set sizes differ")
    i = nearest_anchor_angle(anchors, gt_theta)
    cls_term = -float(log_softmax(pred.confidences)[i])
    return cls_term + (1.0 - float(np.cos(anchors.anchors[i] + pred.offsets[i] - gt_theta)))


def decode_dimension(pred: DimensionPrediction, anchors: DimensionAnchorSet) -> np.ndarray:
    j = int(np.argmax(pred.confidences))
    dims = anchors.anchors[j] + pred.offsets[j]
    if np.any(dims <= 0):
        raise NonPositiveDimension(f"decoded dimensions {dims} are not all positive")
    return dims


def decode_orientation(pred: AnglePrediction, anchors: AngleAnchorSet) -> float:
    j = int(np.argmax(pred.confidences))
    return float(wrap_angle(anchors.anchors[j] + pred.offsets[j]))


# ---------------------------------------------------------------------------
# plain-text serialization


def format_anchors(anchors) -> str:
    if isinstance(anchors, DimensionAnchorSet):
        lines = [f"# dims k={len(anchors)}"]
        lines += [" ".join(repr(float(v)) for v in row) for row in anchors.anchors]
    elif isinstance(anchors, AngleAnchorSet):
        lines = [f"# angles k={len(anchors)}"]
        lines += [repr(float(v)) for v in anchors.anchors]
    else:
        raise TypeError(f"not an anchor set: {type(anchors).__name__}")
    return "\n".join(lines) + "\n"


def parse_anchors(text: str):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("anchor file must start with a '# dims' or '# angles' header")
    header = lines[0].lstrip("#").split()
    kind, count = header[0], header[-1].removeprefix("k=")
    rows = [[float(v) for v in ln.split()] for ln in lines[1:] if not ln.startswith("#")]
    if len(rows) != int(count):
        raise ValueError(f"header declares k={count} but found {len(rows)} anchors")
    if kind == "dims":
        return DimensionAnchorSet(np.array(rows))
    if kind == "angles":
        return AngleAnchorSet(np.array(rows).reshape(-1))
    raise ValueError(f"unknown anchor kind {kind!r}")


def save_anchors(anchors, path) -> None:
    Path(path).write_text(format_anchors(anchors))


def load_anchors(path):
    return parse_anchors(Path(path).read_text())
