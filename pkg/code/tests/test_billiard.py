from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from _billiard import (
    BilliardInvariantError,
    CutoffReflections,
    CutoffTime,
    ExitBall,
    Exited,
    PhasePoint,
    classify_trapped,
    enter_ball,
    flow_to,
    Reflection,
    itinerary,
    next_event,
    reflect,
    trace,
)
from _geometry import Direction, InsideObstacleError, OutsideBallError, Vec2
from _scene_io import load_scene
from _spectra import boundary_phase_point


def test_reflect_reverses_normal_component():
    out = reflect(Direction(1.0, 0.0), Direction(-1.0, 0.0))
    assert (out.vx, out.vy) == pytest.approx((-1.0, 0.0))


def test_reflect_rejects_outgoing_direction():
    with pytest.raises(BilliardInvariantError):
        reflect(Direction(1.0, 0.0), Direction(1.0, 0.0))


@given(st.floats(0.0, 2.0 * math.pi), st.floats(-1.5, 1.5))
def test_reflect_is_specular(normal_angle, incidence):
    n = Direction.from_angle(normal_angle)
    v = (-n).rotated(incidence)
    out = reflect(v, n)
    assert out.dot(n) == pytest.approx(-v.dot(n), abs=1e-12)
    assert out.cross(n) == pytest.approx(v.cross(n), abs=1e-12)


@given(st.floats(0.0, 2.0 * math.pi), st.floats(-1.5, 1.5))
def test_empty_ball_chord_length(empty_scene, psi, phi):
    tr = trace(empty_scene, boundary_phase_point(3.0, psi, phi))
    assert tr.exited
    assert tr.events == ()
    assert tr.interior_time == pytest.approx(6.0 * math.cos(phi), abs=1e-12)


def test_head_on_reflection_returns_to_start(one_disc):
    tr = trace(one_disc, PhasePoint(Vec2(-3.0, 0.0), Direction(1.0, 0.0)))
    assert tr.n_reflections == 1
    ev = tr.events[0]
    assert ev.obstacle_index == 1
    assert ev.time == pytest.approx(2.0)
    assert ev.cos_incidence == pytest.approx(1.0)
    assert isinstance(tr.status, Exited)
    assert tr.interior_time == pytest.approx(4.0)
    assert tr.end.q.x == pytest.approx(-3.0)
    assert tr.end.v.vx == pytest.approx(-1.0)


def test_tangent_ray_passes_straight(one_disc):
    tr = trace(one_disc, PhasePoint(Vec2(-2.0, 1.0), Direction(1.0, 0.0)))
    assert tr.n_reflections == 0
    assert tr.n_tangencies == 1
    assert tr.events[0].point.x == pytest.approx(0.0)
    assert tr.interior_time == pytest.approx(2.0 + math.sqrt(8.0))
    assert tr.end.v.vx == 1.0


def test_axis_orbit_hits_reflection_cap(two_disc):
    tr = trace(two_disc, PhasePoint(Vec2(0.0, 0.0), Direction(1.0, 0.0)), max_reflections=50)
    assert tr.status == CutoffReflections(50)
    assert itinerary(tr)[:4] == (2, 1, 2, 1)
    assert tr.interior_time == pytest.approx(1.0 + 2.0 * 49)


def test_time_cap_stops_inside(two_disc):
    tr = trace(two_disc, PhasePoint(Vec2(0.0, 0.0), Direction(1.0, 0.0)), max_time=10.0)
    assert tr.status == CutoffTime(10.0)
    assert tr.n_reflections == 5
    assert tr.interior_time == 10.0
    assert tr.end.q.x == pytest.approx(0.0, abs=1e-9)


def test_axis_orbit_is_trapped_both_ways(two_disc):
    flags = classify_trapped(two_disc, PhasePoint(Vec2(0.0, 0.0), Direction(1.0, 0.0)), max_reflections=100)
    assert flags.forward_trapped_candidate
    assert flags.backward_trapped_candidate
    assert flags.trapped_candidate


def test_escaping_ray_is_not_trapped(one_disc):
    flags = classify_trapped(one_disc, boundary_phase_point(3.0, 0.3, 0.2))
    assert not flags.trapped_candidate


def test_caps_must_be_positive(one_disc):
    with pytest.raises(ValueError):
        trace(one_disc, boundary_phase_point(3.0, 0.0, 0.0), max_reflections=0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.0 * math.pi), st.floats(-1.4, 1.4))
def test_reversed_exit_retraces_the_trajectory(two_disc, psi, phi):
    forward = trace(two_disc, boundary_phase_point(5.0, psi, phi), max_reflections=20)
    if not forward.exited or forward.n_tangencies or forward.n_reflections > 6:
        return
    if any(ev.cos_incidence < 1e-3 for ev in forward.events):
        return
    backward = trace(two_disc, forward.status.exit.reversed(), max_reflections=20)
    assert backward.exited
    assert backward.interior_time == pytest.approx(forward.interior_time, rel=1e-9)
    assert backward.end.q.x == pytest.approx(forward.start.q.x, abs=1e-7)
    assert backward.end.q.y == pytest.approx(forward.start.q.y, abs=1e-7)
    assert itinerary(backward) == itinerary(forward)[::-1]


def test_enter_ball_from_outside(empty_scene):
    t_in, start = enter_ball(empty_scene, PhasePoint(Vec2(-5.0, 0.0), Direction(1.0, 0.0)))
    assert t_in == pytest.approx(2.0)
    assert start.q.x == pytest.approx(-3.0)
    assert enter_ball(empty_scene, PhasePoint(Vec2(-5.0, 0.0), Direction(-1.0, 0.0))) is None


def test_flow_continues_in_free_flight_after_exit(empty_scene):
    end, tr = flow_to(empty_scene, PhasePoint(Vec2(-5.0, 0.0), Direction(1.0, 0.0)), 20.0)
    assert tr is not None and tr.exited
    assert end.q.x == pytest.approx(15.0)


def test_flow_refuses_to_run_past_the_reflection_cap(two_disc):
    with pytest.raises(BilliardInvariantError):
        flow_to(two_disc, PhasePoint(Vec2(0.0, 0.0), Direction(1.0, 0.0)), 100.0, max_reflections=5)


def test_next_event_reflects_off_the_disc(one_disc):
    outcome = next_event(one_disc, PhasePoint(Vec2(-3.0, 0.0), Direction(1.0, 0.0)))
    assert isinstance(outcome, Reflection)
    assert outcome.event.time == pytest.approx(2.0)
    assert outcome.event.point.x == pytest.approx(-1.0)
    assert outcome.event.cos_incidence == pytest.approx(1.0)


def test_next_event_ball_exit_along_a_chord(one_disc):
    outcome = next_event(one_disc, PhasePoint(Vec2(-3.0, 2.0), Direction(1.0, 0.0)))
    assert isinstance(outcome, ExitBall)
    assert outcome.t == pytest.approx(3.0 + math.sqrt(5.0), abs=1e-7)
    assert outcome.exit.q.x == pytest.approx(math.sqrt(5.0), abs=1e-9)
    assert outcome.exit.q.y == 2.0


@pytest.mark.parametrize("q", [(0.0, 0.0), (0.5, 0.0), (-0.3, 0.9)])
def test_trace_rejects_a_start_inside_an_obstacle(one_disc, q):
    with pytest.raises(InsideObstacleError) as info:
        trace(one_disc, PhasePoint(Vec2(*q), Direction(1.0, 0.0)))
    assert info.value.indices == (1,)


def test_trace_rejects_a_start_outside_the_ball(one_disc):
    with pytest.raises(OutsideBallError):
        trace(one_disc, PhasePoint(Vec2(-4.0, 0.0), Direction(1.0, 0.0)))


def test_trace_may_start_on_an_obstacle_boundary(one_disc):
    tr = trace(one_disc, PhasePoint(Vec2(-1.0, 0.0), Direction(-1.0, 0.0)))
    assert tr.exited
    assert tr.events == ()
    assert tr.interior_time == pytest.approx(2.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 2.0 * math.pi), st.floats(-1.5, 1.5))
def test_event_points_never_enter_an_obstacle(scenes_dir, psi, phi):
    scene = load_scene(scenes_dir / "three_disc.scn").scene
    tr = trace(scene, boundary_phase_point(scene.ball_radius, psi, phi), max_reflections=200)
    previous = tr.start.q
    for ev in tr.events:
        assert (ev.point - previous).norm() > 0.0
        for e in scene.obstacles:
            assert e.implicit(ev.point) >= -1e-9
        previous = ev.point


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.0, 2.0 * math.pi),
    st.floats(-1.5707, 1.5707),
    st.sampled_from([1e-10, 1e-6, 1e-3]),
)
def test_tangential_flag_follows_the_threshold(two_disc, psi, phi, eps_tan):
    tr = trace(two_disc, boundary_phase_point(5.0, psi, phi), max_reflections=50, eps_tan=eps_tan)
    for ev in tr.events:
        assert ev.tangential == (ev.cos_incidence <= eps_tan)
