import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monofit3d.geometry import Cuboid3D
from monofit3d.overlap import (
    ConvexPolygon2D,
    bev_footprint,
    bev_iou,
    iou_3d,
    iou_3d_monte_carlo,
    iou_center_aligned,
    polygon_intersection,
    signed_area,
)

OCTAGON_AREA = 2 * (np.sqrt(2) - 1)
UNIT_SQUARE = ConvexPolygon2D([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]])


def rotated_square(angle):
    c, s = np.cos(angle), np.sin(angle)
    return ConvexPolygon2D(UNIT_SQUARE.vertices @ np.array([[c, -s], [s, c]]).T)


def mc_area_in_both(p, q, n, seed):
    """Area oracle: fraction of uniform points inside both polygons (half-plane tests)."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, size=(n, 2))

    def inside(poly, pts):
        v = poly.vertices
        ok = np.ones(len(pts), dtype=bool)
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            ok &= (b[0] - a[0]) * (pts[:, 1] - a[1]) - (b[1] - a[1]) * (pts[:, 0] - a[0]) >= 0
        return ok

    return 4.0 * np.mean(inside(p, pts) & inside(q, pts))


@pytest.mark.parametrize("a, b, expected", [
    ((2, 2, 2), (2, 2, 2), 1.0),
    ((1, 1, 1), (2, 2, 2), 0.125),
    ((1, 2, 3), (3, 2, 1), 0.2),
])
def test_center_aligned_examples(a, b, expected):
    assert iou_center_aligned(a, b) == pytest.approx(expected, abs=1e-15)
    assert iou_center_aligned(b, a) == iou_center_aligned(a, b)


@given(st.tuples(*[st.floats(0.01, 100)] * 3))
def test_center_aligned_self_is_one(d):
    assert iou_center_aligned(d, d) == 1.0


def test_footprint_examples():
    fp = bev_footprint(Cuboid3D(w=1, h=1, l=2))
    assert sorted(map(tuple, np.round(fp.vertices, 12))) == [(-1, -0.5), (-1, 0.5), (1, -0.5), (1, 0.5)]
    fp = bev_footprint(Cuboid3D(w=1, h=1, l=2, yaw=np.pi / 2))
    assert sorted(map(tuple, np.round(fp.vertices, 12) + 0.0)) == [(-0.5, -1), (-0.5, 1), (0.5, -1), (0.5, 1)]


def test_footprint_area_and_orientation():
    rng = np.random.default_rng(1)
    for _ in range(100):
        c = Cuboid3D(*rng.uniform(0.5, 5, 3), rng.uniform(-10, 10, 3), rng.uniform(-np.pi, np.pi))
        fp = bev_footprint(c)
        assert signed_area(fp.vertices) > 0
        assert fp.area == pytest.approx(c.l * c.w, rel=1e-12)


def test_polygon_intersection_examples():
    same = polygon_intersection(UNIT_SQUARE, UNIT_SQUARE)
    assert same.area == pytest.approx(1.0, abs=1e-15)
    far = ConvexPolygon2D(UNIT_SQUARE.vertices + 3)
    assert polygon_intersection(UNIT_SQUARE, far).is_empty
    assert polygon_intersection(UNIT_SQUARE, far).area == 0.0


def test_octagon_matches_monte_carlo_oracle():
    rot = rotated_square(np.pi / 4)
    oracle = mc_area_in_both(UNIT_SQUARE, rot, 10**7, seed=7)
    # Binomial standard error on 4*p with 1e7 draws is under 6e-4.
    assert abs(oracle - OCTAGON_AREA) < 3e-3
    octagon = polygon_intersection(UNIT_SQUARE, rot)
    assert len(octagon) == 8
    assert octagon.area == pytest.approx(OCTAGON_AREA, abs=1e-12)


def test_touching_squares_have_no_area():
    right = ConvexPolygon2D(UNIT_SQUARE.vertices + [1.0, 0.0])
    assert polygon_intersection(UNIT_SQUARE, right).area == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(0.2, 3))
def test_intersection_area_bounded(angle, dx, dy, scale):
    q = ConvexPolygon2D(rotated_square(angle).vertices * scale + [dx, dy])
    inter = polygon_intersection(UNIT_SQUARE, q)
    assert inter.area <= min(UNIT_SQUARE.area, q.area) + 1e-12
    if not inter.is_empty:
        assert signed_area(inter.vertices) > 0


def test_iou_3d_examples():
    a = Cuboid3D(1.6, 1.5, 3.9, (1, 1.6, 10), 0.3)
    assert iou_3d(a, a) == pytest.approx(1.0, abs=1e-12)
    stacked = Cuboid3D(1.6, 1.5, 3.9, (1, 1.6 - 1.5, 10), 0.3)
    assert iou_3d(a, stacked) == 0.0
    cube = Cuboid3D(1, 1, 1, (0, 0, 0), 0.0)
    turned = Cuboid3D(1, 1, 1, (0, 0, 0), np.pi / 4)
    assert iou_3d(cube, turned) == pytest.approx(1 / np.sqrt(2), abs=1e-9)


def test_iou_3d_against_monte_carlo_45_degrees():
    cube = Cuboid3D(1, 1, 1, (0, 0, 0), 0.0)
    turned = Cuboid3D(1, 1, 1, (0, 0, 0), np.pi / 4)
    assert iou_3d_monte_carlo(cube, turned, 10**6, seed=0) == pytest.approx(0.7071, abs=3e-3)


def test_monte_carlo_trivial_cases():
    a = Cuboid3D(2, 1, 3, (0, 1, 5), 0.0)
    for n in (1, 10, 1000):
        assert iou_3d_monte_carlo(a, a, n, seed=n) == 1.0
    far = Cuboid3D(2, 1, 3, (50, 1, 5), 0.4)
    assert iou_3d_monte_carlo(a, far, 10**4, seed=0) == 0.0
    assert iou_3d_monte_carlo(a, far, 10**4, seed=3) == iou_3d_monte_carlo(a, far, 10**4, seed=3)


def random_pair(rng):
    a = Cuboid3D(*rng.uniform(0.5, 5, 3), rng.uniform(-1, 1, 3), rng.uniform(-np.pi, np.pi))
    b = Cuboid3D(*rng.uniform(0.5, 5, 3), np.asarray(a.location) + rng.uniform(-1, 1, 3),
                 rng.uniform(-np.pi, np.pi))
    return a, b


def test_iou_3d_symmetry_and_range():
    rng = np.random.default_rng(11)
    for _ in range(300):
        a, b = random_pair(rng)
        v = iou_3d(a, b)
        assert v == iou_3d(b, a)
        assert 0.0 <= v <= 1.0
        assert bev_iou(a, b) == bev_iou(b, a)


def test_iou_3d_yaw_invariance():
    rng = np.random.default_rng(12)
    for _ in range(200):
        a, b = random_pair(rng)
        delta = rng.uniform(-np.pi, np.pi)
        c, s = np.cos(delta), np.sin(delta)
        R = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
        a2 = Cuboid3D(a.w, a.h, a.l, R @ np.asarray(a.location), a.yaw + delta)
        b2 = Cuboid3D(b.w, b.h, b.l, R @ np.asarray(b.location), b.yaw + delta)
        assert iou_3d(a2, b2) == pytest.approx(iou_3d(a, b), abs=1e-9)


def test_iou_3d_close_to_monte_carlo_on_random_pairs():
    rng = np.random.default_rng(5)
    for i in range(20):
        a, b = random_pair(rng)
        assert abs(iou_3d(a, b) - iou_3d_monte_carlo(a, b, 2 * 10**5, seed=i)) < 0.02
