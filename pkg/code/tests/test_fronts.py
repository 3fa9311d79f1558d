from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.special import ellipe

from _billiard import BilliardInvariantError, PhasePoint
from _fronts import (
    CurveIntersectionError,
    FrontState,
    GrazingFrontError,
    InvoluteWindowError,
    NonSmoothVariationError,
    NotStrictlyConvexError,
    SampledCurve,
    check_normal_tangency,
    ellipse_arc_length,
    ellipse_perimeter,
    finite_difference_curvature,
    front_at,
    involute,
    param_at_arc_length,
    perpendicular_hits,
    propagate_front,
    sample_ellipse_arc,
    sampled_curvature,
)
from _geometry import Direction, Ellipse, InsideObstacleError, Scene, Vec2, disc
from _spectra import boundary_phase_point


ELLIPSE = Ellipse(Vec2(0.0, 0.0), 2.0, 1.0, 0.0)
EAST = Direction(1.0, 0.0)


def test_circle_arc_length_is_radius_times_angle():
    assert ellipse_arc_length(disc(1.0, 2.0, 1.5), 0.2, 1.2) == pytest.approx(1.5)


def test_ellipse_perimeter_matches_complete_elliptic_integral():
    assert ellipse_perimeter(ELLIPSE) == pytest.approx(8.0 * ellipe(0.75), rel=1e-10)


@given(st.floats(0.0, 9.0))
def test_arc_length_inversion(s):
    t = param_at_arc_length(ELLIPSE, s)
    assert ellipse_arc_length(ELLIPSE, 0.0, t) == pytest.approx(s, abs=1e-8)


def test_sampled_curvature_of_circle_points():
    angles = np.linspace(0.0, 1.0, 20)
    points = np.column_stack((2.0 * np.cos(angles), 2.0 * np.sin(angles)))
    np.testing.assert_allclose(sampled_curvature(points), 0.5, rtol=1e-9)
    np.testing.assert_allclose(sampled_curvature(points[::-1]), -0.5, rtol=1e-9)


def test_sampled_arc_has_outward_normals():
    curve = sample_ellipse_arc(ELLIPSE, -0.4, 0.9, 12)
    assert curve.params[0] == 0.0
    assert np.all(np.diff(curve.params) > 0.0)
    assert np.all(np.einsum("ij,ij->i", curve.normals, curve.points) > 0.0)
    np.testing.assert_allclose(np.hypot(*curve.normals.T), 1.0)


def test_circle_involute_geometry():
    curve = involute(disc(0.0, 0.0, 1.0), 0.0, 0.5, 0.1, 1, 32)
    string = 0.5 - curve.params
    np.testing.assert_allclose(np.hypot(*curve.points.T), np.sqrt(1.0 + string**2), rtol=1e-12)
    np.testing.assert_allclose(curve.curvatures, 1.0 / string)
    assert check_normal_tangency(curve, disc(0.0, 0.0, 1.0)) < 1e-12


def test_circle_involute_sampled_curvature():
    curve = involute(disc(0.0, 0.0, 1.0), 0.0, 0.5, 0.25, 1, 1000)
    k = sampled_curvature(curve.points)[1:-1]
    np.testing.assert_allclose(k, curve.curvatures[1:-1], atol=1e-4)


@pytest.mark.parametrize("orientation", [1, -1])
def test_ellipse_involute_normals_are_tangent_lines(orientation):
    curve = involute(ELLIPSE, 0.7, 0.6, 0.1, orientation, 40)
    assert check_normal_tangency(curve, ELLIPSE) < 1e-6
    assert np.all(curve.curvatures > 0.0)


def test_clockwise_involute_starts_below_the_axis():
    curve = involute(disc(0.0, 0.0, 1.0), 0.0, 0.5, 0.1, -1, 8)
    np.testing.assert_allclose(curve.points[0], (1.0, -0.5), atol=1e-15)
    np.testing.assert_allclose(curve.normals[0], (0.0, -1.0), atol=1e-15)


@pytest.mark.parametrize("args", [(0.5, 0.5), (0.5, 0.0), (0.5, 0.7)])
def test_involute_window_must_be_nonempty(args):
    eps0, delta = args
    with pytest.raises(InvoluteWindowError):
        involute(ELLIPSE, 0.0, eps0, delta)


def test_involute_orientation_is_a_sign():
    with pytest.raises(ValueError):
        involute(ELLIPSE, 0.0, 0.5, 0.1, orientation=0)


def test_flat_front_after_head_on_reflection(one_disc):
    states = propagate_front(one_disc, FrontState(Vec2(-3.0, 0.0), EAST, 0.0))
    assert len(states) == 2
    assert states[0].time == pytest.approx(2.0)
    assert states[0].kappa == pytest.approx(2.0)
    assert states[1].kappa == pytest.approx(0.4)
    assert states[1].dir.vx == pytest.approx(-1.0)


def test_front_keeps_flying_after_exit(one_disc):
    state = front_at(one_disc, FrontState(Vec2(-3.0, 0.0), EAST, 0.0), 6.0)
    assert state.time == 6.0
    assert state.kappa == pytest.approx(2.0 / 9.0)
    assert state.point.x == pytest.approx(-5.0)


def test_oblique_reflection_uses_incidence_cosine(one_disc):
    states = propagate_front(one_disc, FrontState(Vec2(-2.5, 0.6), EAST, 0.0))
    assert states[0].kappa == pytest.approx(2.0 / math.sqrt(1.0 - 0.36))


def test_grazing_front_is_rejected(one_disc):
    with pytest.raises(GrazingFrontError):
        propagate_front(one_disc, FrontState(Vec2(-2.0, 1.0), EAST, 0.0))


def test_front_curvature_must_be_non_negative(one_disc):
    with pytest.raises(ValueError):
        propagate_front(one_disc, FrontState(Vec2(-2.0, 0.0), EAST, -0.1))


def test_front_at_past_reflection_cap(two_disc):
    with pytest.raises(BilliardInvariantError):
        front_at(two_disc, FrontState(Vec2(0.0, 0.0), EAST, 0.0), 100.0, max_reflections=5)


@pytest.mark.parametrize(
    "q, kappa0, T",
    [
        ((-3.0, 0.0), 0.0, 3.0),
        ((-2.5, 0.6), 0.0, 4.0),
        ((-2.5, -0.3), 0.5, 3.5),
    ],
)
def test_finite_differences_agree_with_mirror_law(one_disc, q, kappa0, T):
    x = PhasePoint(Vec2(*q), EAST)
    fd = finite_difference_curvature(one_disc, x, T=T, kappa0=kappa0)
    mirror = front_at(one_disc, FrontState(x.q, x.v, kappa0), T).kappa
    assert fd == pytest.approx(mirror, rel=1e-4)


def test_finite_differences_flag_a_split_beam(one_disc):
    x = PhasePoint(Vec2(-2.0, 1.0 - 1e-6), EAST)
    with pytest.raises(NonSmoothVariationError):
        finite_difference_curvature(one_disc, x, T=4.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.0 * math.pi), st.floats(-1.4, 1.4), st.floats(0.0, 2.0))
def test_front_curvature_stays_non_negative(two_disc, psi, phi, kappa0):
    x = boundary_phase_point(5.0, psi, phi)
    try:
        states = propagate_front(two_disc, FrontState(x.q, x.v, kappa0), max_reflections=30)
    except GrazingFrontError:
        assume(False)
    assert all(s.kappa >= 0.0 for s in states)


def _arc(cx: float, t0: float, t1: float, n: int) -> SampledCurve:
    return sample_ellipse_arc(disc(cx, 0.0, 1.0), t0, t1, n)


@pytest.mark.parametrize("n", [40, 41])
def test_opposing_arcs_have_one_perpendicular_hit(n):
    y = _arc(-2.0, -0.5, 0.5, n)
    x = _arc(2.0, math.pi - 0.5, math.pi + 0.5, n)
    hits = perpendicular_hits(y, x)
    assert not hits.degenerate
    assert len(hits) == 1
    (hit,) = hits
    assert hit.param_y == pytest.approx(0.5, abs=1e-6)
    assert hit.param_x == pytest.approx(0.5, abs=1e-6)
    assert hit.point_y.x == pytest.approx(-1.0, abs=1e-3)
    assert hit.point_x.x == pytest.approx(1.0, abs=1e-3)


def test_concentric_arcs_are_degenerate():
    y = sample_ellipse_arc(disc(0.0, 0.0, 1.0), 0.0, 1.0, 21)
    x = sample_ellipse_arc(disc(0.0, 0.0, 2.0), -0.2, 1.2, 30)
    hits = perpendicular_hits(y, x)
    assert hits.degenerate
    assert len(hits) == 21


def test_crossing_curves_are_rejected():
    y = _arc(0.0, -1.2, 1.2, 30)
    x = _arc(1.0, math.pi - 1.2, math.pi + 1.2, 30)
    with pytest.raises(CurveIntersectionError):
        perpendicular_hits(y, x)


def test_straight_curve_is_not_strictly_convex():
    n = 5
    line = SampledCurve(
        np.arange(n, dtype=float),
        np.column_stack((np.arange(n, dtype=float), np.zeros(n))),
        np.tile([0.0, 1.0], (n, 1)),
        np.zeros(n),
    )
    with pytest.raises(NotStrictlyConvexError):
        perpendicular_hits(line, _arc(0.0, 0.5, 2.5, 10))


def test_unit_circle_faces_a_distant_circle_once():
    y = sample_ellipse_arc(disc(0.0, 0.0, 1.0), -0.6, 0.6, 31)
    x = sample_ellipse_arc(disc(5.0, 0.0, 1.0), math.pi - 0.6, math.pi + 0.6, 31)
    hits = perpendicular_hits(y, x)
    assert len(hits) == 1
    (hit,) = hits
    assert (hit.point_y.x, hit.point_y.y) == pytest.approx((1.0, 0.0), abs=1e-6)
    assert (hit.point_x.x, hit.point_x.y) == pytest.approx((4.0, 0.0), abs=1e-3)


def test_arcs_facing_away_have_no_hits():
    y = sample_ellipse_arc(disc(0.0, 0.0, 1.0), math.pi - 0.6, math.pi + 0.6, 31)
    x = sample_ellipse_arc(disc(5.0, 0.0, 1.0), -0.6, 0.6, 31)
    hits = perpendicular_hits(y, x)
    assert len(hits) == 0
    assert not hits.degenerate


def test_front_cannot_start_inside_an_obstacle(one_disc):
    with pytest.raises(InsideObstacleError):
        propagate_front(one_disc, FrontState(Vec2(0.5, 0.0), EAST, 0.0))


@pytest.mark.parametrize(
    "angle, offset, kappa0, T",
    [
        (0.25, 0.0, 0.0, 2.5),
        (0.25, 0.3, 0.4, 2.5),
        (2.1, -0.2, 0.0, 3.0),
        (-1.3, 0.35, 1.2, 2.2),
    ],
)
def test_mirror_law_on_a_rotated_ellipse(angle, offset, kappa0, T):
    e = Ellipse(Vec2(0.2, -0.1), 1.4, 0.7, 0.6)
    scene = Scene(3.0, (e,))
    d = Direction.from_angle(angle)
    q = e.center - d.vec * 2.0 + d.perp().vec * offset
    x = PhasePoint(q, d)
    fd = finite_difference_curvature(scene, x, T=T, kappa0=kappa0)
    mirror = front_at(scene, FrontState(q, d, kappa0), T).kappa
    assert fd == pytest.approx(mirror, rel=1e-4)
