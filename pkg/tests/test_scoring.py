import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monofit3d.errors import EmptyCandidateSet, OutOfRange
from monofit3d.geometry import CUBOID_EDGES, Cuboid3D, Detection2D, ProjectedBox, project_cuboid
from monofit3d.localization import Candidate, SamplingParams, sample_candidates
from monofit3d.overlap import iou_3d
from monofit3d.scoring import (
    GREEN,
    AlignmentScorer,
    OracleScorer,
    RasterPatch,
    ScoringContext,
    alignment_score,
    bresenham,
    decode_ppm,
    encode_ppm,
    map_iou_label,
    oracle_score,
    pick_best,
    read_ppm,
    render_wireframe,
    unmap_iou_label,
    write_ppm,
)
from synth import IMAGE_SIZE, kitti_camera

CAM = kitti_camera()


def flat_box(corners):
    """ProjectedBox whose 8 vertices collapse onto the four given image points."""
    verts = np.array(list(corners) * 2, dtype=float)
    return ProjectedBox(verts, np.full(8, 10.0))


def rect_projection(x0, y0, x1, y1):
    return flat_box([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


class FixedScorer:
    def __init__(self, values):
        self.values = iter(values)

    def score(self, candidate, context):
        return next(self.values)


def _candidate(c):
    return Candidate(c, project_cuboid(c, CAM))


def test_oracle_score_is_volume_iou():
    gt = Cuboid3D(1.6, 1.5, 3.9, (0.0, 1.6, 15.0), 0.2)
    assert oracle_score(_candidate(gt), gt) == pytest.approx(1.0)
    shifted = gt.moved((0.0, 0.0, 2.0 * 1.6))
    assert oracle_score(_candidate(shifted), gt) == 0.0


def test_alignment_score_example():
    cand = Candidate(None, rect_projection(0, 0, 2, 2))
    assert alignment_score(cand, Detection2D(1, 1, 3, 3)) == pytest.approx(1 / 7)


def test_scorers_need_context():
    cand = _candidate(Cuboid3D(1.6, 1.5, 3.9, (0.0, 1.6, 15.0), 0.0))
    with pytest.raises(ValueError):
        OracleScorer().score(cand, ScoringContext())
    with pytest.raises(ValueError):
        AlignmentScorer().score(cand, ScoringContext())


def test_pick_best_tie_goes_to_first():
    cands = [Candidate(None, None) for _ in range(3)]
    best = pick_best(cands, FixedScorer([0.2, 0.9, 0.9]), ScoringContext())
    assert best is cands[1]
    assert [c.score for c in cands] == [0.2, 0.9, 0.9]


def test_pick_best_empty():
    with pytest.raises(EmptyCandidateSet):
        pick_best([], OracleScorer(), ScoringContext())


def test_pick_best_oracle_is_argmax():
    gt = Cuboid3D(1.6, 1.5, 3.9, (1.0, 1.6, 14.0), 0.5)
    seed = gt.moved((0.4, 0.0, -1.0))
    cands = sample_candidates(seed, SamplingParams([0, 0, 0], [0.5, 0.1, 1.0], 256, seed=3),
                              CAM, IMAGE_SIZE)
    best = pick_best(cands, OracleScorer(), ScoringContext(gt=gt))
    assert best.score == max(iou_3d(c.cuboid, gt) for c in cands)


def test_label_mapping():
    assert map_iou_label(0.0) == -1.0
    assert map_iou_label(1.0) == 1.0
    assert map_iou_label(0.5) == 0.0
    with pytest.raises(OutOfRange):
        map_iou_label(1.01)
    with pytest.raises(OutOfRange):
        unmap_iou_label(-1.5)


@given(st.floats(-1.0, 1.0))
def test_label_mapping_round_trip(label):
    assert abs(map_iou_label(unmap_iou_label(label)) - label) <= 1e-15


def test_bresenham_endpoints_and_connectivity():
    xs, ys = bresenham(2, 3, 11, -4)
    assert (xs[0], ys[0]) == (2, 3) and (xs[-1], ys[-1]) == (11, -4)
    steps = np.abs(np.diff(xs)) + np.abs(np.diff(ys))
    assert np.all(np.maximum(np.abs(np.diff(xs)), np.abs(np.diff(ys))) == 1)
    assert len(xs) == 10 and steps.max() <= 2


def test_offscreen_box_leaves_patch_untouched():
    base = RasterPatch.blank(40, 30, (7, 8, 9))
    out = render_wireframe(base, rect_projection(100, 100, 140, 120))
    assert out == base


def test_behind_camera_edges_skipped():
    base = RasterPatch.blank(40, 30)
    proj = rect_projection(5, 5, 20, 20)
    proj = ProjectedBox(proj.vertices, np.full(8, -1.0))
    assert render_wireframe(base, proj) == base


def test_single_horizontal_edge_clipped_span():
    base = RasterPatch.blank(40, 30)
    # Every edge collapses onto the row-12 segment from x=-10 to x=25.
    proj = flat_box([(-10, 12), (25, 12), (25, 12), (-10, 12)])
    out = render_wireframe(base, proj)
    changed = np.any(out.pixels != base.pixels, axis=2)
    expected = np.zeros_like(changed)
    expected[12, 0:26] = True
    np.testing.assert_array_equal(changed, expected)
    assert np.all(out.pixels[12, :26] == GREEN)


def _segment_distance(px, py, a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    d = b - a
    t = np.clip(((px - a[0]) * d[0] + (py - a[1]) * d[1]) / max(d @ d, 1e-300), 0.0, 1.0)
    return np.hypot(px - (a[0] + t * d[0]), py - (a[1] + t * d[1]))


def _oracle_mask(width, height, proj, reach):
    """Pixels whose center lies within ``reach`` of some edge, by brute force."""
    py, px = np.mgrid[0:height, 0:width].astype(float)
    mask = np.zeros((height, width), dtype=bool)
    for i, j in CUBOID_EDGES:
        mask |= _segment_distance(px, py, proj.vertices[i], proj.vertices[j]) <= reach
    return mask


@pytest.mark.parametrize("a,b", [(10, 6), (1, 1), (25, 3)])
def test_rectangle_wireframe_matches_distance_oracle(a, b):
    base = RasterPatch.blank(48, 32)
    proj = rect_projection(7, 9, 7 + a, 9 + b)
    out = render_wireframe(base, proj)
    green = np.all(out.pixels == GREEN, axis=2)
    assert green.sum() == 2 * (a + b)
    np.testing.assert_array_equal(green, _oracle_mask(48, 32, proj, 0.5))


def test_thick_rectangle_matches_chebyshev_oracle():
    base = RasterPatch.blank(48, 32)
    proj = rect_projection(7, 9, 30, 20)
    out = render_wireframe(base, proj, linewidth=3)
    green = np.all(out.pixels == GREEN, axis=2)
    # For axis-aligned edges the 3x3 stamp covers exactly the pixels within
    # Chebyshev distance 1, which is the Euclidean 1-neighbourhood plus corners.
    py, px = np.mgrid[0:32, 0:48]
    expected = ((px >= 6) & (px <= 31) & (py >= 8) & (py <= 21)) & ~(
        (px >= 9) & (px <= 28) & (py >= 11) & (py <= 18))
    np.testing.assert_array_equal(green, expected)


def test_render_idempotent_and_pure():
    cam_box = project_cuboid(Cuboid3D(1.6, 1.5, 3.9, (0.5, 1.6, 12.0), 0.7), CAM)
    base = RasterPatch.blank(*IMAGE_SIZE, color=(30, 30, 30))
    before = base.to_bytes()
    once = render_wireframe(base, cam_box)
    twice = render_wireframe(once, cam_box)
    assert base.to_bytes() == before
    assert once == twice
    assert once.to_bytes() == render_wireframe(base, cam_box).to_bytes()
    assert np.all(once.pixels[np.any(once.pixels != base.pixels, axis=2)] == GREEN)


def test_render_rejects_bad_linewidth():
    with pytest.raises(ValueError):
        render_wireframe(RasterPatch.blank(4, 4), rect_projection(0, 0, 2, 2), linewidth=0)


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    patch = RasterPatch(13, 7, rng.integers(0, 256, (7, 13, 3), dtype=np.uint8))
    data = encode_ppm(patch)
    assert decode_ppm(data) == patch
    assert encode_ppm(decode_ppm(data)) == data
    path = tmp_path / "p.ppm"
    write_ppm(patch, path)
    assert read_ppm(path) == patch
    assert path.read_bytes() == data


def test_ppm_header_comments_and_errors():
    body = bytes(range(12))
    patch = decode_ppm(b"P6\n# made by hand\n2 2\n255\n" + body)
    assert patch.pixels.tobytes() == body
    with pytest.raises(ValueError):
        decode_ppm(b"P3\n2 2\n255\n" + body)
    with pytest.raises(ValueError):
        decode_ppm(b"P6\n2 2\n255\n" + body[:5])
    with pytest.raises(ValueError):
        decode_ppm(b"P6\n2 2\n65535\n" + body)


@settings(max_examples=40, deadline=None)
@given(st.integers(-30, 80), st.integers(-30, 60), st.integers(-30, 80), st.integers(-30, 60))
def test_drawn_pixels_stay_near_segment(x0, y0, x1, y1):
    base = RasterPatch.blank(50, 30)
    proj = flat_box([(x0, y0), (x1, y1), (x1, y1), (x0, y0)])
    green = np.all(render_wireframe(base, proj).pixels == GREEN, axis=2)
    near = _oracle_mask(50, 30, proj, 0.75)
    assert not np.any(green & ~near)


@settings(max_examples=40, deadline=None)
@given(st.integers(-60, 110), st.integers(-60, 90), st.integers(-60, 110), st.integers(-60, 90),
       st.sampled_from([1, 2, 3]))
def test_clipping_matches_crop_of_larger_canvas(x0, y0, x1, y1, lw):
    small = RasterPatch.blank(50, 30)
    big = RasterPatch.blank(50 + 200, 30 + 200)
    proj = flat_box([(x0, y0), (x1, y1), (x1, y1), (x0, y0)])
    moved = flat_box([(x0 + 100, y0 + 100), (x1 + 100, y1 + 100)] * 2)
    a = render_wireframe(small, proj, linewidth=lw).pixels
    b = render_wireframe(big, moved, linewidth=lw).pixels[100:130, 100:150]
    np.testing.assert_array_equal(a, b)


def test_far_offscreen_vertex_does_not_blow_up():
    base = RasterPatch.blank(40, 30)
    proj = flat_box([(10, 10), (1e13, 10), (1e13, 10), (10, 10)])
    green = np.all(render_wireframe(base, proj).pixels == GREEN, axis=2)
    assert green[10, 10:].all() and green.sum() == 30
