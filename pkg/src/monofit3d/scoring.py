"""Scoring candidates and drawing their wireframes.

A scorer maps a candidate to a real number, higher meaning a better fit
to the object. Two reference scorers are provided: the ground-truth volume
IoU (what a perfectly trained fitting-quality network would output) and a
2D alignment baseline. Any learned model can be plugged in through the
same ``score(candidate, context)`` method.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np

from .errors import EmptyCandidateSet, OutOfRange
from .geometry import CUBOID_EDGES, Cuboid3D, Detection2D, ProjectedBox, projected_hull_bbox, rect_iou
from .localization import Candidate
from .overlap import iou_3d

GREEN = (0, 255, 0)


@dataclass(frozen=True)
class ScoringContext:
    gt: Cuboid3D | None = None
    det: Detection2D | None = None
    patch: "RasterPatch | None" = None


class Scorer(Protocol):
    def score(self, candidate: Candidate, context: ScoringContext) -> float: ...


def oracle_score(candidate: Candidate, gt: Cuboid3D) -> float:
    return iou_3d(candidate.cuboid, gt)


def alignment_score(candidate: Candidate, det: Detection2D) -> float:
    """2D IoU between the candidate's projected hull and the detection box."""
    return rect_iou(projected_hull_bbox(candidate.projection), det.box)


class OracleScorer:
    name = "oracle"

    def score(self, candidate, context):
        if context.gt is None:
            raise ValueError("oracle scoring needs a ground-truth cuboid in the context")
        return oracle_score(candidate, context.gt)


class AlignmentScorer:
    name = "alignment"

    def score(self, candidate, context):
        if context.det is None:
            raise ValueError("alignment scoring needs a detection box in the context")
        return alignment_score(candidate, context.det)


SCORERS = {"oracle": OracleScorer, "alignment": AlignmentScorer}


def pick_best(candidates, scorer: Scorer, context: ScoringContext) -> Candidate:
    """Score every candidate in place and return the highest (earliest on ties)."""
    if not candidates:
        raise EmptyCandidateSet("no candidates to choose from")
    best = None
    for cand in candidates:
        cand.score = float(scorer.score(cand, context))
        if best is None or cand.score > best.score:
            best = cand
    return best


def map_iou_label(iou: float) -> float:
    """Stretch an IoU target from [0, 1] to [-1, 1]."""
    if not 0.0 <= iou <= 1.0:
        raise OutOfRange(f"IoU {iou} outside [0, 1]")
    return 2.0 * iou - 1.0


def unmap_iou_label(label: float) -> float:
    if not -1.0 <= label <= 1.0:
        raise OutOfRange(f"label {label} outside [-1, 1]")
    return (label + 1.0) / 2.0


# ---------------------------------------------------------------------------
# raster patches


@dataclass(frozen=True)
class RasterPatch:
    """RGB image, pixels stored as a (height, width, 3) uint8 array."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError(f"pixel array shape {px.shape} != ({self.height}, {self.width}, 3)")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("patch must be non-empty")
        object.__setattr__(self, "pixels", px)

    @classmethod
    def blank(cls, width, height, color=(0, 0, 0)):
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[...] = color
        return cls(width, height, px)

    def to_bytes(self) -> bytes:
        return self.pixels.tobytes()

    def __eq__(self, other):
        return (isinstance(other, RasterPatch) and self.width == other.width
                and self.height == other.height and np.array_equal(self.pixels, other.pixels))


def _read_token(data: bytes, pos: int):
    while True:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    return data[start:pos], pos


def decode_ppm(data: bytes) -> RasterPatch:
    """Parse a binary (P6) PPM with maxval 255."""
    magic, pos = _read_token(data, 0)
    if magic != b"P6":
        raise ValueError("not a binary PPM (P6) file")
    width, pos = _read_token(data, pos)
    height, pos = _read_token(data, pos)
    maxval, pos = _read_token(data, pos)
    width, height, maxval = int(width), int(height), int(maxval)
    if maxval != 255:
        raise ValueError("only 8-bit PPM files are supported")
    pos += 1  # single whitespace byte after maxval
    n = width * height * 3
    body = data[pos:pos + n]
    if len(body) != n:
        raise ValueError("truncated PPM pixel data")
    return RasterPatch(width, height, np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3))


def encode_ppm(patch: RasterPatch) -> bytes:
    return b"P6\n%d %d\n255\n" % (patch.width, patch.height) + patch.to_bytes()


def read_ppm(path) -> RasterPatch:
    return decode_ppm(Path(path).read_bytes())


def write_ppm(patch: RasterPatch, path) -> None:
    Path(path).write_bytes(encode_ppm(patch))


# ---------------------------------------------------------------------------
# line drawing


def _line_pixels(x0: int, y0: int, x1: int, y1: int, k_lo: int = 0, k_hi: int | None = None):
    """Steps ``k_lo..k_hi`` of the integer midpoint line from (x0, y0) to (x1, y1).

    Step k advances the major axis by k and the minor axis by the rounded
    (half away from the start) value of k * dminor / dmajor, which is the
    pixel sequence of the classic error-accumulating midpoint algorithm.
    Being closed-form, any sub-range can be drawn without walking the rest.
    """
    dx, dy = x1 - x0, y1 - y0
    n = max(abs(dx), abs(dy))
    k_hi = n if k_hi is None else k_hi
    k = np.arange(k_lo, k_hi + 1, dtype=np.int64)
    if n == 0:
        return np.full(k.shape, x0, dtype=np.int64), np.full(k.shape, y0, dtype=np.int64)

    def axis(start, d):
        if abs(d) == n:
            return start + np.sign(d) * k
        return start + int(np.sign(d)) * ((2 * k * abs(d) + n) // (2 * n))

    return axis(x0, dx), axis(y0, dy)


def bresenham(x0: int, y0: int, x1: int, y1: int):
    """Integer pixels of the segment from (x0, y0) to (x1, y1), endpoints included."""
    return _line_pixels(int(x0), int(y0), int(x1), int(y1))


def _clip_segment(p0, p1, lo, hi):
    """Liang-Barsky clip of a float segment to the box [lo, hi]; None if outside."""
    t0, t1 = 0.0, 1.0
    d = p1 - p0
    for axis in range(2):
        for p, q in ((-d[axis], p0[axis] - lo[axis]), (d[axis], hi[axis] - p0[axis])):
            if p == 0:
                if q < 0:
                    return None
                continue
            t = q / p
            if p < 0:
                t0 = max(t0, t)
            else:
                t1 = min(t1, t)
            if t0 > t1:
                return None
    return p0 + t0 * d, p0 + t1 * d


# Endpoints further than this outside the patch are pulled in first so the
# integer arithmetic stays small; the slope change is far below a pixel.
_FAR = 1e6


def draw_segment(pixels: np.ndarray, p0, p1, color=GREEN, linewidth: int = 1) -> None:
    """Rasterize one segment into ``pixels`` (modified in place)."""
    height, width = pixels.shape[:2]
    lo_off = -((linewidth - 1) // 2)
    hi_off = linewidth // 2
    a = np.round(np.asarray(p0, dtype=float))
    b = np.round(np.asarray(p1, dtype=float))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        return
    far_lo = np.array([-_FAR, -_FAR])
    far_hi = np.array([width + _FAR, height + _FAR])
    if np.any(np.minimum(a, b) < far_lo) or np.any(np.maximum(a, b) > far_hi):
        clipped = _clip_segment(a, b, far_lo, far_hi)
        if clipped is None:
            return
        a, b = (np.round(p) for p in clipped)
    x0, y0, x1, y1 = (int(v) for v in (*a, *b))

    # Restrict steps to those whose major coordinate can touch the patch.
    n = max(abs(x1 - x0), abs(y1 - y0))
    if abs(x1 - x0) >= abs(y1 - y0):
        start, d, extent = x0, x1 - x0, width
    else:
        start, d, extent = y0, y1 - y0, height
    k_lo, k_hi = 0, n
    if n > 0:
        lo_m, hi_m = -hi_off, extent - 1 - lo_off
        step = 1 if d > 0 else -1
        ka, kb = (lo_m - start) * step, (hi_m - start) * step
        k_lo, k_hi = max(0, min(ka, kb)), min(n, max(ka, kb))
        if k_lo > k_hi:
            return
    xs, ys = _line_pixels(x0, y0, x1, y1, k_lo, k_hi)
    for ox in range(lo_off, hi_off + 1):
        for oy in range(lo_off, hi_off + 1):
            px, py = xs + ox, ys + oy
            ok = (px >= 0) & (px < width) & (py >= 0) & (py < height)
            pixels[py[ok], px[ok]] = color


def render_wireframe(base: RasterPatch, projection: ProjectedBox, color=GREEN,
                     linewidth: int = 1, offset=(0.0, 0.0)) -> RasterPatch:
    """Copy of ``base`` with the 12 projected cuboid edges drawn on it.

    ``offset`` is subtracted from the projected coordinates, for drawing on
    a crop. Edges with an endpoint behind the camera are skipped.
    """
    if linewidth < 1:
        raise ValueError("linewidth must be >= 1")
    pixels = base.pixels.copy()
    verts = np.asarray(projection.vertices, dtype=float) - np.asarray(offset, dtype=float)
    depths = np.asarray(projection.depths)
    for i, j in CUBOID_EDGES:
        if depths[i] <= 0 or depths[j] <= 0:
            continue
        draw_segment(pixels, verts[i], verts[j], color, linewidth)
    return RasterPatch(base.width, base.height, pixels)
