import numpy as np
import pytest

from monofit3d.errors import DegenerateFit
from monofit3d.geometry import CameraIntrinsics, Detection2D, wrap_angle
from monofit3d.orientation import (
    KITTI_RAY_COEFFICIENT,
    OrientationTriple,
    RayCoefficient,
    fit_ray_coefficient,
    global_from_local,
    local_from_global,
    ray_from_bbox,
    ray_from_bbox_exact,
    ray_from_location,
)


def box_at(u_center, half_width=20):
    return Detection2D(u_center - half_width, 100, u_center + half_width, 150)


def test_ray_from_bbox_examples():
    assert ray_from_bbox(box_at(621), 1242, 0.001) == 0.0
    assert ray_from_bbox(box_at(121), 1242, KITTI_RAY_COEFFICIENT) == pytest.approx(0.6204, abs=1e-12)
    assert ray_from_bbox(box_at(900), 1242, 0.001) < 0


def test_ray_antisymmetric_about_center():
    for u in (10.0, 300.5, 700.0):
        mirrored = Detection2D(1242 - (u + 30), 0, 1242 - (u - 30), 10)
        assert ray_from_bbox(mirrored, 1242, 0.0013) == pytest.approx(-ray_from_bbox(box_at(u, 30), 1242, 0.0013))


def test_ray_corner_mean_option():
    corners = np.array([100, 140, 120, 130, 100, 140, 120, 130], dtype=float)
    assert ray_from_bbox(box_at(0), 1000, 0.001, corners_u=corners) == pytest.approx(0.001 * (500 - 122.5))


def test_global_from_local_examples():
    assert global_from_local(0.5, 0.0) == pytest.approx(0.5)
    assert global_from_local(0.0, 0.2) == pytest.approx(-0.2)
    assert global_from_local(3.0, -0.5) == pytest.approx(3.5 - 2 * np.pi, abs=1e-12)


def test_round_trip():
    rng = np.random.default_rng(0)
    for g, r in rng.uniform(-np.pi, np.pi, size=(1000, 2)):
        back = global_from_local(local_from_global(g, r), r)
        assert abs(wrap_angle(back - g)) < 1e-12


def test_triple_invariant():
    t = OrientationTriple.from_local_and_ray(2.9, -0.6)
    assert abs(wrap_angle(t.theta_ray - (t.theta_local - t.theta_global))) < 1e-12
    t = OrientationTriple.from_global_and_ray(-3.0, 0.4)
    assert abs(wrap_angle(t.theta_ray - (t.theta_local - t.theta_global))) < 1e-12


def test_sign_convention_matches_kitti_alpha():
    # KITTI labels satisfy alpha = rotation_y - atan2(x, z).
    rng = np.random.default_rng(1)
    for _ in range(200):
        x, z, ry = rng.uniform(-20, 20), rng.uniform(3, 60), rng.uniform(-np.pi, np.pi)
        alpha = wrap_angle(ry - np.arctan2(x, z))
        assert abs(wrap_angle(local_from_global(ry, ray_from_location((x, 1.6, z))) - alpha)) < 1e-12


def test_exact_ray_matches_pinhole_geometry():
    cam = CameraIntrinsics([[721.5, 0, 609.5, 0], [0, 721.5, 172.8, 0], [0, 0, 1, 0]])
    for x, z in [(-8.0, 20.0), (0.0, 10.0), (12.0, 15.0)]:
        u = 609.5 + 721.5 * x / z
        ray = ray_from_bbox_exact(box_at(u), cam)
        assert ray == pytest.approx(ray_from_location((x, 0, z)), abs=1e-12)
        # The proportional model is the small-angle version of the same relation.
        assert np.sign(ray) == np.sign(ray_from_bbox(box_at(u), 1219, 1 / 721.5)) or x == 0


def test_fit_examples():
    x = np.linspace(-600, 600, 41)
    fit = fit_ray_coefficient(np.column_stack([x, 0.002 * x]))
    assert fit.k == pytest.approx(0.002, abs=1e-15)
    assert fit.residual < 1e-12
    assert fit_ray_coefficient([(100, 0.1)]).k == pytest.approx(0.001)


def test_fit_degenerate():
    with pytest.raises(DegenerateFit):
        fit_ray_coefficient([(0, 0.1), (0, -0.2)])
    with pytest.raises(DegenerateFit):
        fit_ray_coefficient([])


def test_fit_order_and_scale():
    rng = np.random.default_rng(2)
    pairs = np.column_stack([rng.uniform(-600, 600, 100), rng.normal(0, 0.3, 100)])
    k = fit_ray_coefficient(pairs).k
    assert fit_ray_coefficient(pairs[::-1]).k == pytest.approx(k, rel=1e-12)
    assert fit_ray_coefficient(pairs[rng.permutation(100)]).k == pytest.approx(k, rel=1e-12)
    scaled = pairs * [1, 3.5]
    assert fit_ray_coefficient(scaled).k == pytest.approx(3.5 * k, rel=1e-12)


def test_fit_on_pinhole_pairs_brackets_kitti_value():
    f, half_width = 721.5, 621.0
    offsets = np.linspace(-half_width, half_width, 2001)
    rays = np.arctan(offsets / f)
    k = fit_ray_coefficient(np.column_stack([offsets, rays])).k
    assert 0.0011 <= k <= 0.0016
    assert k < 1 / f  # arctan flattens away from the center


def test_ray_coefficient_bounds():
    with pytest.raises(ValueError):
        RayCoefficient(0.5)
    with pytest.raises(ValueError):
        RayCoefficient(float("nan"))
