"""Exterior billiard flow inside the ball M: event loop, specular reflection, trapping flags.

``next_event`` advances one step of the flow (nearest obstacle hit or the ball
exit); ``trace`` iterates it until the trajectory leaves M or a cap trips.
Tangential hits never bend the ray: they are recorded as events and the ray
continues straight, which is the generalized flow for convex obstacles.

Event times are cumulative from the start of the trace. Caps only ever
produce *candidate* trapping: a finite simulation cannot certify that a
trajectory is infinitely long.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from loguru import logger

from _geometry import (
    BOUNDARY_TOL,
    DEFAULT_EPS_TAN,
    Direction,
    Miss,
    OutsideBallError,
    Scene,
    Tangent,
    Vec2,
    outward_normal,
    ray_circle_entry,
    ray_circle_exit,
    ray_ellipse_intersect,
    require_admissible_point,
)


DEPARTURE_GUARD = 1e-9
DEFAULT_MAX_REFLECTIONS = 10_000
DEFAULT_MAX_TIME = 1e6


class BilliardInvariantError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    q: Vec2
    v: Direction

    def reversed(self) -> PhasePoint:
        return PhasePoint(self.q, -self.v)


@dataclass(frozen=True)
class ReflectionEvent:
    time: float
    obstacle_index: int
    point: Vec2
    cos_incidence: float
    tangential: bool


@dataclass(frozen=True)
class Exited:
    exit_time: float
    exit: PhasePoint


@dataclass(frozen=True)
class CutoffReflections:
    n: int


@dataclass(frozen=True)
class CutoffTime:
    T: float


TrajectoryStatus = Union[Exited, CutoffReflections, CutoffTime]


@dataclass(frozen=True)
class Trajectory:
    start: PhasePoint
    events: tuple[ReflectionEvent, ...]
    status: TrajectoryStatus
    interior_time: float
    end: PhasePoint

    @property
    def exited(self) -> bool:
        return isinstance(self.status, Exited)

    @property
    def reflections(self) -> tuple[ReflectionEvent, ...]:
        return tuple(ev for ev in self.events if not ev.tangential)

    @property
    def n_reflections(self) -> int:
        return sum(1 for ev in self.events if not ev.tangential)

    @property
    def n_tangencies(self) -> int:
        return sum(1 for ev in self.events if ev.tangential)


@dataclass(frozen=True)
class Reflection:
    event: ReflectionEvent
    after: PhasePoint


@dataclass(frozen=True)
class TangencyPass:
    event: ReflectionEvent
    after: PhasePoint


@dataclass(frozen=True)
class ExitBall:
    t: float
    exit: PhasePoint


EventOutcome = Union[Reflection, TangencyPass, ExitBall]


@dataclass(frozen=True)
class TrapFlags:
    forward_trapped_candidate: bool
    backward_trapped_candidate: bool

    @property
    def trapped_candidate(self) -> bool:
        return self.forward_trapped_candidate or self.backward_trapped_candidate


Itinerary = tuple[int, ...]


def reflect(v: Direction, n: Direction) -> Direction:
    """Specular reflection of an incoming ``v`` at a boundary with outward normal ``n``."""
    dot = v.dot(n)
    if dot >= 0.0:
        raise BilliardInvariantError(
            f"Reflection requires an incoming direction: <v, n> = {dot:.3e} >= 0"
        )
    return Direction.from_components(v.vx - 2.0 * dot * n.vx, v.vy - 2.0 * dot * n.vy)


def _ball_exit(scene: Scene, x: PhasePoint) -> tuple[float, Vec2]:
    a = scene.ball_radius
    if x.q.norm() <= a + BOUNDARY_TOL:
        return ray_circle_exit(x.q, x.v, a)
    t_in = ray_circle_entry(x.q, x.v, a)
    if t_in is None:
        raise OutsideBallError(f"Ray from ({x.q.x}, {x.q.y}) never meets the ball of radius {a}")
    t_out, point = ray_circle_exit(x.q + x.v.vec * t_in, x.v, a)
    return t_in + t_out, point


def next_event(
    scene: Scene,
    x: PhasePoint,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
    elapsed: float = 0.0,
) -> EventOutcome:
    """Nearest forward event from ``x``: an obstacle hit or the ball exit.

    Hits closer than ``DEPARTURE_GUARD`` are discarded so the reflection point
    just left is not found again. At equal times a tangency is ordered before
    the ball exit.
    A transversal hit whose incidence cosine is at most ``eps_tan`` is passed
    through as a tangency.
    """
    best_t = math.inf
    best_index = 0
    best_hit = None
    for index, e in enumerate(scene.obstacles, start=1):
        hit = ray_ellipse_intersect(x.q, x.v, e, eps_tan)
        if isinstance(hit, Miss):
            continue
        t = hit.t if isinstance(hit, Tangent) else hit.t_enter
        if t <= DEPARTURE_GUARD or t >= best_t:
            continue
        best_t, best_index, best_hit = t, index, hit

    exit_t, exit_q = _ball_exit(scene, x)

    if best_hit is None or best_t > exit_t:
        if exit_t <= 0.0 and x.q.norm() < scene.ball_radius - DEPARTURE_GUARD:
            raise BilliardInvariantError(f"No forward event found from {x}")
        return ExitBall(elapsed + exit_t, PhasePoint(exit_q, x.v))

    e = scene.obstacle(best_index)
    if isinstance(best_hit, Tangent):
        event = ReflectionEvent(elapsed + best_t, best_index, best_hit.point, 0.0, True)
        return TangencyPass(event, PhasePoint(best_hit.point, x.v))

    point = best_hit.p_enter
    normal = outward_normal(e, point)
    cos_incidence = min(1.0, max(0.0, -x.v.dot(normal)))
    if cos_incidence <= eps_tan:
        event = ReflectionEvent(elapsed + best_t, best_index, point, cos_incidence, True)
        return TangencyPass(event, PhasePoint(point, x.v))
    event = ReflectionEvent(elapsed + best_t, best_index, point, cos_incidence, False)
    return Reflection(event, PhasePoint(point, reflect(x.v, normal)))


def trace(
    scene: Scene,
    x: PhasePoint,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> Trajectory:
    """Follow the flow from ``x`` until the ball exit or a reflection/time cap.

    ``x.q`` must lie in the closed ball and outside every obstacle interior.
    """
    if max_reflections < 1 or not max_time > 0.0:
        raise ValueError(f"Caps must be positive (max_reflections={max_reflections}, max_time={max_time})")
    require_admissible_point(scene, x.q)

    events: list[ReflectionEvent] = []
    current = x
    elapsed = 0.0
    n_reflections = 0
    while True:
        outcome = next_event(scene, current, eps_tan=eps_tan, elapsed=elapsed)
        if isinstance(outcome, ExitBall):
            if outcome.t > max_time:
                end = PhasePoint(current.q + current.v.vec * (max_time - elapsed), current.v)
                return Trajectory(x, tuple(events), CutoffTime(max_time), max_time, end)
            return Trajectory(x, tuple(events), Exited(outcome.t, outcome.exit), outcome.t, outcome.exit)

        event = outcome.event
        if event.time > max_time:
            end = PhasePoint(current.q + current.v.vec * (max_time - elapsed), current.v)
            return Trajectory(x, tuple(events), CutoffTime(max_time), max_time, end)
        events.append(event)
        elapsed = event.time
        current = outcome.after
        if isinstance(outcome, Reflection):
            n_reflections += 1
            if n_reflections >= max_reflections:
                return Trajectory(x, tuple(events), CutoffReflections(n_reflections), elapsed, current)


def itinerary(tr: Trajectory) -> Itinerary:
    """Obstacle indices of the non-tangential reflections, in order."""
    return tuple(ev.obstacle_index for ev in tr.events if not ev.tangential)


def classify_trapped(
    scene: Scene,
    x: PhasePoint,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> TrapFlags:
    forward = trace(scene, x, max_reflections, max_time, eps_tan=eps_tan)
    backward = trace(scene, x.reversed(), max_reflections, max_time, eps_tan=eps_tan)
    return TrapFlags(not forward.exited, not backward.exited)


def enter_ball(scene: Scene, x: PhasePoint) -> tuple[float, PhasePoint] | None:
    """Move a phase point started outside M onto the ball boundary along its ray."""
    t_in = ray_circle_entry(x.q, x.v, scene.ball_radius)
    if t_in is None:
        return None
    return t_in, PhasePoint(x.q + x.v.vec * t_in, x.v)


def flow_to(
    scene: Scene,
    x: PhasePoint,
    T: float,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> tuple[PhasePoint, Trajectory | None]:
    """Billiard flow at time ``T``, continued in a straight line outside M.

    Returns the phase point at time ``T`` and the in-ball trajectory (None when
    the ray never meets the ball). Raises if a reflection cap trips first.
    """
    entry = enter_ball(scene, x)
    if entry is None:
        return PhasePoint(x.q + x.v.vec * T, x.v), None
    t_in, start = entry
    if t_in >= T:
        return PhasePoint(x.q + x.v.vec * T, x.v), None

    remaining = T - t_in
    tr = trace(scene, start, max_reflections, remaining, eps_tan=eps_tan)
    if isinstance(tr.status, CutoffReflections):
        raise BilliardInvariantError(
            f"Reflection cap {max_reflections} reached before time {T}; flow undefined"
        )
    if isinstance(tr.status, Exited):
        extra = remaining - tr.status.exit_time
        end = tr.status.exit
        return PhasePoint(end.q + end.v.vec * extra, end.v), tr
    return tr.end, tr


def log_trajectory_summary(tr: Trajectory) -> None:
    logger.info(
        f"Trajectory: {tr.n_reflections} reflections, {tr.n_tangencies} tangencies, "
        f"status {type(tr.status).__name__}, interior time {tr.interior_time:.12g}"
    )
