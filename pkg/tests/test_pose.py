import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hullpose import (DegenerateCluster, EstimationFailed, Hull, NoVisibleEdge, OriginInsideHull,
                      assemble_box3d, boundary_points, convex_hull, estimate_pose, is_visible,
                      occlusion_area, polygon_area, project_to_plane, rect_from_theta,
                      select_projection_edge, theta_grid)
from hullpose import _kernels as K
from hullpose.pose import fit_from_scores
from hullpose.synth import ScanConfig, VehicleSpec, random_observed_hull, simulate_scan

from conftest import rotation
from oracles import ray_cast_edge

DELTA = math.radians(0.5)
TRIANGLE = [(10, -1), (12, 1), (12, -1)]


def hull_of(pts):
    return convex_hull(np.asarray(pts, dtype=float))


def scores_of(hull, theta):
    rect = rect_from_theta(hull, theta)
    wedge = boundary_points(hull)
    el = select_projection_edge(rect, wedge, "left")
    er = select_projection_edge(rect, wedge, "right")
    return rect, wedge, el, er, occlusion_area(hull, rect, wedge, el, er)


# projection and box assembly

def test_project_to_plane_example():
    flat = project_to_plane([(1, 2, 0.5), (3, 4, 2.5)])
    assert flat.points.tolist() == [[1, 2], [3, 4]]
    assert (flat.z_min, flat.z_max) == (0.5, 2.5)
    box = assemble_box3d(rect_from_theta(hull_of(flat.points), 0.0), flat.z_min, flat.z_max)
    assert box.height == 2.0 and box.center[2] == 1.5


def test_project_flat_cluster():
    flat = project_to_plane([(0, 0, 1.0), (1, 0, 1.0), (0, 1, 1.0)])
    assert flat.z_min == flat.z_max == 1.0


def test_project_rejects_single_point():
    with pytest.raises(DegenerateCluster):
        project_to_plane([(1, 2, 3)])


def test_assemble_box3d_example():
    rect = rect_from_theta(hull_of([(0, 0), (4, 0), (4, 2), (0, 2)]), 0.0)
    box = assemble_box3d(rect, 0.2, 1.8)
    assert box.center == pytest.approx((2, 1, 1.0), abs=1e-12)
    assert (box.extent_e1, box.extent_e2, box.yaw) == (4, 2, 0)
    assert box.height == pytest.approx(1.6, abs=1e-12)
    flat = assemble_box3d(rect, 0.7, 0.7)
    assert flat.height == 0 and flat.center[2] == 0.7
    assert np.allclose(box.footprint(), rect.vertices)


# rectangle frame

def test_rect_axis_aligned():
    rect = rect_from_theta(hull_of([(0, 0), (2, 0), (2, 1), (0, 1)]), 0.0)
    assert rect.edges.tolist() == [[1, 0, 0], [-0.0, 1, 0], [1, 0, 2], [-0.0, 1, 1]]
    assert np.allclose(rect.vertices, [(0, 0), (2, 0), (2, 1), (0, 1)])


def test_rect_at_45_degrees():
    rect = rect_from_theta(hull_of([(0, 0), (1, 0), (1, 1), (0, 1)]), math.pi / 4)
    assert rect.extent_e1 == pytest.approx(math.sqrt(2))
    assert rect.extent_e2 == pytest.approx(math.sqrt(2))
    assert rect.area == pytest.approx(2.0)


def test_rect_vertices_are_edge_intersections(rng):
    from hullpose import line_intersection
    hull = hull_of(rng.normal(size=(20, 2)) + (8, 3))
    for theta in rng.uniform(0, math.pi / 2, 20):
        rect = rect_from_theta(hull, theta)
        for i in range(4):
            p = line_intersection(rect.line(i), rect.line(i + 1))
            assert np.allclose(p, rect.vertices[i], atol=1e-9)


@settings(max_examples=200)
@given(st.integers(0, 2**31), st.floats(0, math.pi / 2, exclude_max=True))
def test_rect_contains_hull(seed, theta):
    hull = random_observed_hull(np.random.default_rng(seed))
    rect = rect_from_theta(hull, theta)
    for p in hull.points:
        assert rect.contains(p, tol=1e-9)


# wedge

def test_boundary_points_square():
    hull = hull_of([(10, -1), (10, 1), (12, 1), (12, -1)])
    w = boundary_points(hull)
    assert tuple(hull[w.vl_idx_r]) == (10, 1)
    assert tuple(hull[w.vl_idx_l]) == (10, -1)
    assert w.azimuth_r == pytest.approx(math.atan2(1, 10))
    assert w.azimuth_l == pytest.approx(-math.atan2(1, 10))


def test_boundary_points_behind_sensor():
    hull = hull_of([(-11, -1), (-11, 1), (-13, 1), (-13, -1)])
    w = boundary_points(hull)
    for p in hull.points:
        assert is_visible(p, w)
    assert w.azimuth_l < w.azimuth_r
    # extreme rays pass through the near corners
    assert {tuple(hull[w.vl_idx_l]), tuple(hull[w.vl_idx_r])} == {(-11, -1), (-11, 1)}


def test_boundary_points_segment():
    hull = hull_of([(5, 0), (5, 2)])
    w = boundary_points(hull)
    assert tuple(hull[w.vl_idx_l]) == (5, 0)
    assert tuple(hull[w.vl_idx_r]) == (5, 2)


@pytest.mark.parametrize("pts", [[(-1, -1), (1, -1), (1, 1), (-1, 1)], [(0, 0), (2, 0), (0, 2)],
                                 [(-1, 0), (1, 0)]])
def test_origin_inside_or_on_hull(pts):
    with pytest.raises(OriginInsideHull):
        boundary_points(hull_of(pts))


def test_is_visible_examples():
    w = boundary_points(hull_of(TRIANGLE))
    pl, pr = np.array(w.point_l), np.array(w.point_r)
    assert is_visible((pl + pr) / 2, w)
    assert is_visible(pl, w) and is_visible(pr, w)
    for rel in (w.azimuth_l - 1e-3, w.azimuth_r + 1e-3):
        az = rel + w.center_azimuth
        assert not is_visible((10 * math.cos(az), 10 * math.sin(az)), w)


def test_wedge_contains_hull_vertices(rng):
    for _ in range(200):
        hull = random_observed_hull(rng)
        w = boundary_points(hull)
        for i, p in enumerate(hull.points):
            assert is_visible(p, w)


# projection edge

def test_projection_edge_near_face():
    hull = hull_of([(10, -1), (10, 1), (12, 1), (12, -1)])
    rect = rect_from_theta(hull, 0.0)
    w = boundary_points(hull)
    assert select_projection_edge(rect, w, "left") == 0
    assert select_projection_edge(rect, w, "right") == 0


def test_projection_edge_vertex_coincidence():
    hull = hull_of([(10, 1), (12, 1.5), (11, 3)])
    rect = rect_from_theta(hull, 0.0)
    w = boundary_points(hull)
    assert tuple(hull[w.vl_idx_l]) == (10, 1)
    assert np.allclose(rect.vertices[0], (10, 1))
    e = select_projection_edge(rect, w, "left")
    assert e == 0
    # a ray nudged into the wedge enters through the same side
    az = math.atan2(1, 10) + 1e-7
    assert ray_cast_edge(rect, (math.cos(az), math.sin(az))) == e


def test_projection_edge_bad_side():
    hull = hull_of(TRIANGLE)
    with pytest.raises(ValueError):
        select_projection_edge(rect_from_theta(hull, 0.0), boundary_points(hull), "up")


def test_projection_edge_matches_ray_cast(rng):
    # scan endpoints are often rectangle corners, so many rays graze a vertex
    checked = 0
    for _ in range(200):
        hull = random_observed_hull(rng)
        w = boundary_points(hull)
        theta = float(rng.choice(theta_grid()))
        rect = rect_from_theta(hull, theta)
        for side, p in (("left", w.point_l), ("right", w.point_r)):
            want = ray_cast_edge(rect, p)
            if want is None:
                continue
            assert select_projection_edge(rect, w, side) == want
            checked += 1
    assert checked > 150


def test_unusable_rectangle_raises():
    from hullpose.pose import OrientedRectFrame
    hull = hull_of(TRIANGLE)
    w = boundary_points(hull)
    # a rectangle entirely behind the sensor is never crossed by the rays
    far = rect_from_theta(hull_of([(-20, -1), (-18, -1), (-18, 1), (-20, 1)]), 0.0)
    with pytest.raises(NoVisibleEdge):
        select_projection_edge(OrientedRectFrame(0.0, far.edges, far.vertices), w, "left")


# occlusion area

def test_occlusion_zero_when_hull_is_rectangle():
    hull = hull_of([(10, -1), (10, 1), (12, 1), (12, -1)])
    assert scores_of(hull, 0.0)[-1] == 0.0


def test_occlusion_zero_for_rotated_rectangle(rng):
    for _ in range(50):
        spec = VehicleSpec(4.5, 1.8, tuple(rng.uniform(5, 20, 2)), float(rng.uniform(0, math.pi / 2)))
        hull = hull_of(spec.corners())
        *_, area = scores_of(hull, spec.yaw)
        assert area == pytest.approx(0.0, abs=1e-9)


def test_triangle_hand_case():
    hull = hull_of(TRIANGLE)
    rect, w, el, er, area = scores_of(hull, 0.0)
    assert (el, er) == (0, 0)
    assert abs(area - 2.0) <= 1e-9


def test_segment_hull_single_trapezoid():
    hull = hull_of([(10, 0), (12, 1)])
    for theta in (0.0, 0.3, 1.0):
        rect, w, el, er, area = scores_of(hull, theta)
        assert 0 <= area <= rect.area + 1e-12


@settings(max_examples=200)
@given(st.integers(0, 2**31), st.integers(0, 179))
def test_occlusion_bounded_by_rectangle(seed, k):
    hull = random_observed_hull(np.random.default_rng(seed))
    rect, *_, area = scores_of(hull, theta_grid()[k])
    assert 0.0 <= area <= rect.area * (1 + 1e-12)


def test_single_pass_matches_swept_polygon(rng):
    """When the right pass alone walks the whole front chain, its trapezoids
    tile the polygon bounded by the chain and its feet on the projection line."""
    tested = 0
    for _ in range(300):
        hull = random_observed_hull(rng)
        w = boundary_points(hull)
        rect = rect_from_theta(hull, float(rng.choice(theta_grid())))
        er = select_projection_edge(rect, w, "right")
        pts, n = hull.points, len(hull)
        area, gap = K._pass(pts, rect.edges, er, w.vl_idx_r, w.vl_idx_l, 1, n)
        if gap != 0:
            continue
        a, b, c = rect.edges[er]
        chain = [pts[(w.vl_idx_r + i) % n] for i in range((w.vl_idx_l - w.vl_idx_r) % n + 1)]
        foot = lambda p: p - (a * p[0] + b * p[1] - c) * np.array([a, b])
        poly = chain + [foot(chain[-1]), foot(chain[0])]
        # the chain may touch the line; the polygon stays simple since heights never flip
        assert abs(area) == pytest.approx(polygon_area(poly), abs=1e-9)
        tested += 1
    assert tested > 50


# full search

def test_estimate_synthetic_yaw_30():
    spec = VehicleSpec(4.5, 1.8, (15 * math.cos(0.2), 15 * math.sin(0.2)), math.radians(30))
    fit = estimate_pose(simulate_scan(spec, ScanConfig()).cluster)
    assert abs(math.degrees(fit.theta_star) - 30) <= 0.5
    assert len(fit.score_curve) == math.ceil(90 / 0.5)


def test_estimate_segment_cluster():
    phi = math.radians(20)
    cluster = [(10, 2, 0), (10 + 3 * math.cos(phi), 2 + 3 * math.sin(phi), 1)]
    fit = estimate_pose(cluster)
    assert abs(fit.theta_star - phi) <= DELTA + 1e-12
    assert min(fit.box.extent_e1, fit.box.extent_e2) == pytest.approx(0, abs=1e-9)


def test_tie_break_prefers_smallest_theta():
    hull = hull_of([(9, -1), (11, -1), (11, 1), (9, 1)])
    flat = project_to_plane([(9, -1, 0), (11, 1, 1)])
    thetas = theta_grid()
    scores = np.ones(len(thetas))
    scores[[7, 30, 100]] = 0.25
    assert fit_from_scores(hull, flat, thetas, scores).theta_star == thetas[7]


def test_square_cluster_picks_first_minimum():
    cluster = [(x, y, 0.0) for x, y in [(9, -1), (11, -1), (11, 1), (9, 1)]]
    fit = estimate_pose(cluster)
    assert fit.theta_star == fit.thetas[int(np.flatnonzero(fit.scores == fit.scores.min())[0])]
    assert fit.theta_star == 0.0


def test_all_scores_infinite_fails():
    hull = hull_of(TRIANGLE)
    flat = project_to_plane([(10, -1, 0), (12, 1, 0)])
    thetas = theta_grid()
    with pytest.raises(EstimationFailed):
        fit_from_scores(hull, flat, thetas, np.full(len(thetas), np.inf))


def test_grid_length_and_range():
    for deg in (0.5, 1.0, 7.0, 0.3):
        g = theta_grid(math.radians(deg))
        assert len(g) == math.ceil(90 / deg - 1e-9)
        assert g[0] == 0 and g[-1] < math.pi / 2
    with pytest.raises(ValueError):
        theta_grid(0)


def _noisy_cluster(rng):
    from hullpose.synth import two_sided_scene
    return two_sided_scene(rng, ScanConfig(noise_sigma=float(rng.uniform(0, 0.05))))[1].cluster


def test_scale_equivariance(rng):
    for _ in range(50):
        c = _noisy_cluster(rng)
        s = float(np.exp(rng.uniform(-2, 2)))
        f = estimate_pose(c)
        g = estimate_pose(c * np.array([s, s, 1.0]))
        ok = np.isfinite(f.scores)
        assert np.array_equal(ok, np.isfinite(g.scores))
        assert np.allclose(g.scores[ok], f.scores[ok] * s * s, rtol=1e-9, atol=0)
        assert np.argmin(g.scores) == np.argmin(f.scores)


def test_rotation_equivariance(rng):
    for _ in range(50):
        c = _noisy_cluster(rng)
        phi = float(rng.uniform(-math.pi, math.pi))
        r = c.copy()
        r[:, :2] = c[:, :2] @ rotation(phi).T
        shift = estimate_pose(r).theta_star - estimate_pose(c).theta_star - phi
        wrapped = (shift + math.pi / 4) % (math.pi / 2) - math.pi / 4
        assert abs(wrapped) <= DELTA + 1e-9


def test_order_invariance(rng):
    for _ in range(50):
        c = _noisy_cluster(rng)
        assert estimate_pose(c[rng.permutation(len(c))]).same_as(estimate_pose(c))
