import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from hsfsim import geom
from hsfsim.geom import GeometryError, RectPanel, Vec3

FLOOR = RectPanel((0, -1, 0), (2, 0, 0), (0, 2, 0))
coord = st.floats(-20, 20, allow_nan=False)
points = st.builds(Vec3, coord, coord, coord)


def test_mirror_examples():
    z0 = RectPanel((-5, -5, 0), (10, 0, 0), (0, 10, 0))
    y0 = RectPanel((10, 0, 0), (-10, 0, 0), (0, 0, 4))
    assert geom.mirror_point(Vec3(1, 2, 3), z0) == pytest.approx((1, 2, -3))
    assert geom.mirror_point(Vec3(3, 4, 0), z0) == pytest.approx((3, 4, 0))
    assert geom.mirror_point(Vec3(7.6, 11.4, 2), y0) == pytest.approx((7.6, -11.4, 2))


def test_degenerate_panel_rejected():
    with pytest.raises(GeometryError):
        RectPanel((0, 0, 0), (0, 0, 0), (0, 1, 0))
    with pytest.raises(GeometryError):
        RectPanel((0, 0, 0), (1, 0, 0), (1, 1, 0))


def test_normal_is_unit_cross_product():
    p = RectPanel((1, 2, 3), (0, 2, 0), (0, 0, 5))
    assert p.normal == pytest.approx((1, 0, 0))
    assert p.area == pytest.approx(10)


def test_trace_zeroth_order():
    path = geom.trace_image_path(Vec3(0, 0, 0), Vec3(3, 4, 0), [])
    assert path.total_length == pytest.approx(5)
    assert path.bounce_count == 0


def test_trace_floor_bounce():
    path = geom.trace_image_path(Vec3(0, 0, 1), Vec3(2, 0, 1), [FLOOR])
    assert path.vertices[1] == pytest.approx((1, 0, 0))
    assert path.total_length == pytest.approx(2 * math.sqrt(2), rel=1e-12)
    assert path.incidence_angles[0] == pytest.approx(math.pi / 4)


def test_trace_outside_rectangle():
    small = RectPanel((0, -1, 0), (0.5, 0, 0), (0, 2, 0))
    assert geom.trace_image_path(Vec3(0, 0, 1), Vec3(2, 0, 1), [small]) is None


def test_trace_back_side_rejected():
    assert geom.trace_image_path(Vec3(0, 0, -1), Vec3(2, 0, -1), [FLOOR]) is None


def test_incidence_angle_examples():
    wall = RectPanel((10, 15, 0), (0, -15, 0), (0, 0, 4))
    assert wall.normal == pytest.approx((-1, 0, 0))
    assert geom.incidence_angle(Vec3(1, 0, 0), wall) == pytest.approx(0)
    assert geom.incidence_angle(Vec3(1, 1, 0), wall) == pytest.approx(math.pi / 4)
    d = Vec3(10, 3.5, 0.5) - Vec3(7.6, 11.4, 2)
    expected = math.acos(2.4 / d.norm())
    assert d.norm() == pytest.approx(8.392, abs=1e-3)
    assert geom.incidence_angle(d, wall) == pytest.approx(expected, abs=1e-12)
    assert math.degrees(expected) == pytest.approx(73.4, abs=0.05)
    with pytest.raises(GeometryError):
        geom.incidence_angle(Vec3(0, 0, 0), wall)


def test_occlusion_examples(room_scene):
    p = RectPanel((0, 0, 0), (1, 0, 0), (0, 1, 0))
    assert not geom.is_occluded(Vec3(0, 0, 1), Vec3(1, 1, 1), [p])
    assert geom.is_occluded(Vec3(0.5, 0.5, 1), Vec3(0.5, 0.5, -1), [p])
    assert not geom.is_occluded(Vec3(1, 1, 0), Vec3(2, 2, 1), [p])
    mid = [room_scene.wall("mid_west").panel, room_scene.wall("mid_east").panel]
    assert geom.is_occluded(Vec3(7.6, 11.4, 2), Vec3(1.15, 0.6, 1.5), mid)


def test_open_segment_ends_on_panel():
    p = RectPanel((0, 0, 0), (1, 0, 0), (0, 1, 0))
    assert not geom.is_occluded(Vec3(0.5, 0.5, 0), Vec3(0.5, 0.5, 2), [p])


@given(points, points, points)
def test_mirror_involution(p, o, n):
    if n.norm() < 1e-3:
        return
    u = n.cross(Vec3(1, 0, 0)) if abs(n.x) < 0.9 * n.norm() else n.cross(Vec3(0, 1, 0))
    v = n.cross(u)
    panel = RectPanel(o, u, v)
    q = geom.mirror_point(geom.mirror_point(p, panel), panel)
    assert q.dist(p) <= 1e-9 * max(1.0, p.norm(), o.norm())
    mid = (p + geom.mirror_point(p, panel)) * 0.5
    assert abs(panel.signed_distance(mid)) <= 1e-9 * max(1.0, p.norm(), o.norm())


# three panels around the positive octant corner
CORNER = [
    RectPanel((0.4, 0.3, 0), (2.4, 0, 0), (0, 2.5, 0)),  # floor
    RectPanel((0, 0.2, 0.1), (0, 2.6, 0), (0, 0, 1.7)),  # x = 0
    RectPanel((2.7, 0, 0.2), (-2.3, 0, 0), (0, 0, 1.6)),  # y = 0
]


def _path_length(params, tx, rx, panels):
    pts = [tx]
    for k, panel in enumerate(panels):
        a, b = params[2 * k], params[2 * k + 1]
        pts.append(panel.origin + panel.edge_u * a + panel.edge_v * b)
    pts.append(rx)
    return sum(pts[i].dist(pts[i + 1]) for i in range(len(pts) - 1))


def _brute_force(tx, rx, panels, grid=11):
    """Fermat search for the shortest broken path; None if it sits on a rectangle edge."""
    axes = [np.linspace(0, 1, grid)] * (2 * len(panels))
    best = min(itertools.product(*axes), key=lambda q: _path_length(q, tx, rx, panels))
    res = minimize(
        _path_length, np.array(best), args=(tx, rx, panels),
        method="L-BFGS-B", bounds=[(0, 1)] * len(best), options={"ftol": 1e-15, "gtol": 1e-12},
    )
    if np.any(res.x < 1e-4) or np.any(res.x > 1 - 1e-4):
        return None
    return res.fun


@pytest.mark.parametrize("seed", range(6))
def test_brute_force_equivalence(seed):
    rng = np.random.default_rng(seed)
    tx = Vec3(*rng.uniform([0.3, 0.3, 0.3], [2.5, 2.5, 1.8]))
    rx = Vec3(*rng.uniform([0.3, 0.3, 0.3], [2.5, 2.5, 1.8]))
    orders = [(k,) for k in range(3)] + [(a, b) for a in range(3) for b in range(3) if a != b]
    found = 0
    for order in orders:
        panels = [CORNER[k] for k in order]
        path = geom.trace_image_path(tx, rx, panels)
        oracle = _brute_force(tx, rx, panels, grid=11 if len(order) == 1 else 7)
        if oracle is None:
            assert path is None, order
        else:
            found += 1
            assert path is not None, order
            assert path.total_length == pytest.approx(oracle, abs=1e-6)
    assert found >= 3


@settings(max_examples=200)
@given(
    st.floats(0.1, 2.9), st.floats(0.1, 2.9), st.floats(0.1, 1.9),
    st.floats(0.1, 2.9), st.floats(0.1, 2.9), st.floats(0.1, 1.9),
    st.permutations([0, 1, 2]),
)
def test_image_path_properties(x1, y1, z1, x2, y2, z2, perm):
    tx, rx = Vec3(x1, y1, z1), Vec3(x2, y2, z2)
    for n in (1, 2):
        panels = [CORNER[k] for k in perm[:n]]
        path = geom.trace_image_path(tx, rx, panels)
        if path is None:
            continue
        image = tx
        for p in panels:
            image = geom.mirror_point(image, p)
        assert path.total_length == pytest.approx(image.dist(rx), rel=1e-9)
        assert path.total_length == pytest.approx(sum(path.segment_lengths), rel=1e-9)
        v = path.vertices
        for k, panel in enumerate(panels):
            assert abs(panel.signed_distance(v[k + 1])) < 1e-9
            assert panel.contains(v[k + 1], tol=1e-9)
            out = geom.incidence_angle(v[k + 2] - v[k + 1], panel)
            assert path.incidence_angles[k] == pytest.approx(out, abs=1e-9)


def test_ray_panel_hit():
    p = RectPanel((0, 0, 0), (1, 0, 0), (0, 1, 0))
    assert geom.ray_panel_hit(Vec3(0.5, 0.5, 2), Vec3(0, 0, -1), p) == pytest.approx(2)
    assert geom.ray_panel_hit(Vec3(0.5, 0.5, 2), Vec3(0, 0, 1), p) is None
    assert geom.ray_panel_hit(Vec3(3, 0.5, 2), Vec3(0, 0, -1), p) is None


def test_arrival_angles():
    el, az = geom.arrival_angles(Vec3(0, 0, 0), Vec3(-1, 0, 1))
    # angles point back towards where the ray came from
    assert el == pytest.approx(math.pi / 4)
    assert az == pytest.approx(math.pi)
