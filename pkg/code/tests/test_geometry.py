from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from _geometry import (
    DegenerateEllipseError,
    Direction,
    Ellipse,
    GeometryError,
    InsideObstacleError,
    Miss,
    OffBoundaryError,
    OutsideBallError,
    OverlapError,
    Scene,
    Tangent,
    TooCloseToBallError,
    Transversal,
    Vec2,
    boundary_curvature,
    disc,
    ellipse_area,
    outward_normal,
    ray_circle_exit,
    ray_ellipse_intersect,
    require_admissible_point,
    validate_scene,
)


EAST = Direction(1.0, 0.0)


def test_direction_rejects_non_unit():
    with pytest.raises(GeometryError):
        Direction(1.0, 1.0)


def test_direction_from_components_normalises():
    d = Direction.from_components(3.0, 4.0)
    assert d.vx == pytest.approx(0.6)
    assert d.vy == pytest.approx(0.8)


def test_head_on_ray_is_transversal():
    hit = ray_ellipse_intersect(Vec2(-5.0, 0.0), EAST, disc(0.0, 0.0, 1.0))
    assert isinstance(hit, Transversal)
    assert hit.t_enter == pytest.approx(4.0)
    assert hit.t_exit == pytest.approx(6.0)
    assert hit.p_enter.x == pytest.approx(-1.0)


def test_ray_above_disc_misses():
    assert isinstance(ray_ellipse_intersect(Vec2(-5.0, 2.0), EAST, disc(0.0, 0.0, 1.0)), Miss)


def test_ray_touching_top_is_tangent():
    hit = ray_ellipse_intersect(Vec2(-5.0, 1.0), EAST, disc(0.0, 0.0, 1.0))
    assert isinstance(hit, Tangent)
    assert hit.t == pytest.approx(5.0)
    assert hit.point.y == pytest.approx(1.0)


def test_obstacle_behind_origin_is_a_miss():
    assert isinstance(ray_ellipse_intersect(Vec2(5.0, 0.0), EAST, disc(0.0, 0.0, 1.0)), Miss)


def test_rotated_ellipse_entry():
    e = Ellipse(Vec2(0.0, 0.0), 2.0, 1.0, 0.5 * math.pi)
    hit = ray_ellipse_intersect(Vec2(0.0, -5.0), Direction(0.0, 1.0), e)
    assert isinstance(hit, Transversal)
    assert hit.t_enter == pytest.approx(3.0)


@given(
    st.floats(-0.99, 0.99),
    st.floats(0.0, 2.0 * math.pi),
)
def test_transversal_entry_lies_on_the_boundary(offset, angle):
    e = disc(0.3, -0.2, 1.0)
    d = Direction.from_angle(angle)
    origin = e.center - d.vec * 4.0 + d.perp().vec * offset
    hit = ray_ellipse_intersect(origin, d, e)
    assert isinstance(hit, Transversal)
    assert (hit.p_enter - e.center).norm() == pytest.approx(1.0, abs=1e-9)
    assert outward_normal(e, hit.p_enter).dot(d) < 0.0


def test_outward_normal_and_curvature_on_ellipse():
    e = Ellipse(Vec2(0.0, 0.0), 2.0, 1.0, 0.0)
    n = outward_normal(e, Vec2(0.0, 1.0))
    assert (n.vx, n.vy) == pytest.approx((0.0, 1.0))
    assert boundary_curvature(e, Vec2(2.0, 0.0)) == pytest.approx(2.0)
    assert boundary_curvature(e, Vec2(0.0, 1.0)) == pytest.approx(0.25)


def test_normal_off_boundary_raises():
    with pytest.raises(OffBoundaryError):
        outward_normal(disc(0.0, 0.0, 1.0), Vec2(0.5, 0.0))


def test_ellipse_area():
    assert ellipse_area(Ellipse(Vec2(1.0, 1.0), 1.5, 0.4, 0.2)) == pytest.approx(0.6 * math.pi)


def test_ball_exit_from_boundary_crosses_the_diameter():
    t, p = ray_circle_exit(Vec2(3.0, 0.0), Direction(-1.0, 0.0), 3.0)
    assert t == pytest.approx(6.0)
    assert p.x == pytest.approx(-3.0)


def test_obstacle_index_is_one_based():
    scene = Scene(3.0, (disc(0.0, 0.0, 1.0),))
    assert scene.obstacle(1).semi_major == 1.0
    with pytest.raises(IndexError):
        scene.obstacle(0)


def test_validate_accepts_registry_scene(two_disc):
    report = validate_scene(two_disc)
    assert report.n_obstacles == 2
    assert report.min_gap == pytest.approx(2.0)
    assert min(report.clearances) == pytest.approx(2.0)


def test_validate_reports_overlap_indices():
    with pytest.raises(OverlapError) as info:
        validate_scene(Scene(4.0, (disc(0.0, 0.0, 1.0), disc(1.5, 0.0, 1.0))))
    assert info.value.indices == (1, 2)
    assert "Overlap(1,2)" in str(info.value)


def test_validate_reports_overlapping_ellipses():
    a = Ellipse(Vec2(-1.0, 0.0), 1.5, 0.5, 0.0)
    b = Ellipse(Vec2(1.2, 0.3), 1.5, 0.5, 0.5)
    with pytest.raises(OverlapError):
        validate_scene(Scene(5.0, (a, b)))


@pytest.mark.parametrize("center", [(2.5, 0.0), (2.0, 0.0)])
def test_validate_rejects_obstacle_at_the_ball(center):
    with pytest.raises(TooCloseToBallError) as info:
        validate_scene(Scene(3.0, (disc(0.0, -1.5, 0.5), disc(*center, 1.0))))
    assert info.value.indices == (2,)


@pytest.mark.parametrize(
    "ellipse",
    [
        Ellipse(Vec2(0.0, 0.0), 1.0, 0.0, 0.0),
        Ellipse(Vec2(0.0, 0.0), 0.5, 1.0, 0.0),
        Ellipse(Vec2(0.0, 0.0), 1.0, 0.5, 4.0),
    ],
)
def test_validate_rejects_degenerate_shapes(ellipse):
    with pytest.raises(DegenerateEllipseError):
        validate_scene(Scene(3.0, (ellipse,)))


def _rotate(p: Vec2, angle: float) -> Vec2:
    c, s = math.cos(angle), math.sin(angle)
    return Vec2(c * p.x - s * p.y, s * p.x + c * p.y)


@given(st.floats(0.0, 2.0 * math.pi), st.floats(0.0, 2.0 * math.pi), st.floats(-0.6, 0.6))
def test_intersection_is_invariant_under_rotating_scene_and_ray(alpha, angle, offset):
    e = Ellipse(Vec2(0.3, -0.2), 1.5, 0.7, 0.4)
    d = Direction.from_angle(angle)
    origin = e.center - d.vec * 4.0 + d.perp().vec * offset
    turned = Ellipse(_rotate(e.center, alpha), 1.5, 0.7, (0.4 + alpha) % math.pi)
    hit = ray_ellipse_intersect(origin, d, e)
    moved = ray_ellipse_intersect(_rotate(origin, alpha), d.rotated(alpha), turned)
    assert isinstance(hit, Transversal) and isinstance(moved, Transversal)
    assert moved.t_enter == pytest.approx(hit.t_enter, abs=1e-9)
    assert moved.t_exit == pytest.approx(hit.t_exit, abs=1e-9)


@given(st.floats(0.0, math.pi - 1e-9), st.floats(0.0, 2.0 * math.pi), st.floats(-0.95, 0.95))
def test_disc_intersection_ignores_the_rotation_value(rotation, angle, offset):
    d = Direction.from_angle(angle)
    origin = Vec2(0.5, 0.2) - d.vec * 3.0 + d.perp().vec * offset
    plain = ray_ellipse_intersect(origin, d, disc(0.5, 0.2, 1.0))
    turned = ray_ellipse_intersect(origin, d, Ellipse(Vec2(0.5, 0.2), 1.0, 1.0, rotation))
    assert turned.t_enter == pytest.approx(plain.t_enter, abs=1e-9)


@settings(max_examples=100)
@given(
    st.floats(0.5, 2.0),
    st.floats(0.3, 1.0),
    st.floats(0.0, math.pi - 1e-9),
    st.floats(0.0, 2.0 * math.pi),
)
def test_boundary_curvature_matches_finite_differences(semi_major, ratio, rotation, t):
    e = Ellipse(Vec2(0.4, -0.7), semi_major, semi_major * ratio, rotation)
    h = 1e-4
    before, here, after = e.point_at(t - h), e.point_at(t), e.point_at(t + h)
    d1 = (after - before) * (0.5 / h)
    d2 = (after - here * 2.0 + before) * (1.0 / h**2)
    expected = d1.cross(d2) / d1.norm() ** 3
    assert boundary_curvature(e, here) == pytest.approx(expected, rel=1e-5)


def test_ball_exit_upwards_from_inside():
    t, p = ray_circle_exit(Vec2(2.0, 0.0), Direction(0.0, 1.0), 3.0)
    assert t == pytest.approx(math.sqrt(5.0), abs=1e-9)
    assert (p.x, p.y) == pytest.approx((2.0, math.sqrt(5.0)), abs=1e-9)


@given(st.floats(0.0, 2.9), st.floats(0.0, 2.0 * math.pi), st.floats(0.0, 2.0 * math.pi))
def test_ball_exit_lands_on_the_circle(r0, position_angle, angle):
    origin = _rotate(Vec2(r0, 0.0), position_angle)
    _, p = ray_circle_exit(origin, Direction.from_angle(angle), 3.0)
    assert p.norm() == pytest.approx(3.0, abs=1e-9)


def test_admissible_points(one_disc):
    require_admissible_point(one_disc, Vec2(-3.0, 0.0))
    require_admissible_point(one_disc, Vec2(-1.0, 0.0))
    require_admissible_point(one_disc, Vec2(0.0, 2.0))
    with pytest.raises(InsideObstacleError) as info:
        require_admissible_point(one_disc, Vec2(0.5, 0.0))
    assert info.value.indices == (1,)
    with pytest.raises(OutsideBallError):
        require_admissible_point(one_disc, Vec2(3.5, 0.0))
