"""Planar primitives for exterior billiards: vectors, elliptic obstacles, scenes.

Obstacles are ellipses, which keeps every ray/boundary intersection closed-form:
the ellipse is mapped affinely onto the unit circle, the quadratic is solved
there and the parameter ``t`` is read back in the original length units (an
affine map preserves the ray parameter).

``validate_scene`` enforces the two scene invariants (containment in the ball
with clearance, pairwise disjointness with a positive gap) and raises a
:class:`SceneValidationError` subclass naming the offending obstacle indices.
Obstacle indices are 1-based throughout the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from loguru import logger
from scipy.optimize import minimize, minimize_scalar


DEFAULT_EPS_TAN = 1e-10
BOUNDARY_TOL = 1e-9
UNIT_TOL = 1e-12
CLEARANCE_FRACTION = 1e-6
GAP_FRACTION = 1e-6
VALIDATION_TOL = 1e-9


class GeometryError(ValueError):
    pass


class OffBoundaryError(GeometryError):
    pass


class OutsideBallError(GeometryError):
    pass


class InsideObstacleError(GeometryError):
    def __init__(self, i: int, detail: str = "") -> None:
        self.indices = (i,)
        super().__init__(f"InsideObstacle({i}): {detail}")


class SceneValidationError(GeometryError):
    pass


class OverlapError(SceneValidationError):
    def __init__(self, i: int, j: int, detail: str = "") -> None:
        self.indices = (i, j)
        super().__init__(f"Overlap({i},{j}): obstacles {i} and {j} are not disjoint{detail}")


class TooCloseToBallError(SceneValidationError):
    def __init__(self, i: int, detail: str = "") -> None:
        self.indices = (i,)
        super().__init__(f"TooCloseToBall({i}): obstacle {i} is not strictly inside the ball{detail}")


class DegenerateEllipseError(SceneValidationError):
    def __init__(self, i: int, detail: str = "") -> None:
        self.indices = (i,)
        super().__init__(f"DegenerateEllipse({i}): {detail}")


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"Vec2 coordinates must be finite, got ({self.x}, {self.y})")

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, scale: float) -> Vec2:
        return Vec2(self.x * scale, self.y * scale)

    __rmul__ = __mul__

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2 | Direction) -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Vec2 | Direction) -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Direction:
    vx: float
    vy: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.vx) and math.isfinite(self.vy)):
            raise GeometryError(f"Direction components must be finite, got ({self.vx}, {self.vy})")
        if abs(self.vx * self.vx + self.vy * self.vy - 1.0) > UNIT_TOL:
            raise GeometryError(f"Direction ({self.vx}, {self.vy}) is not a unit vector")

    @classmethod
    def from_components(cls, vx: float, vy: float) -> Direction:
        length = math.hypot(vx, vy)
        if length == 0.0 or not math.isfinite(length):
            raise GeometryError(f"Cannot normalise direction ({vx}, {vy})")
        return cls(vx / length, vy / length)

    @classmethod
    def from_angle(cls, angle: float) -> Direction:
        return cls(math.cos(angle), math.sin(angle))

    @property
    def x(self) -> float:
        return self.vx

    @property
    def y(self) -> float:
        return self.vy

    @property
    def vec(self) -> Vec2:
        return Vec2(self.vx, self.vy)

    @property
    def angle(self) -> float:
        return math.atan2(self.vy, self.vx)

    def __neg__(self) -> Direction:
        return Direction(-self.vx, -self.vy)

    def perp(self) -> Direction:
        """Counterclockwise rotation by π/2."""
        return Direction(-self.vy, self.vx)

    def rotated(self, angle: float) -> Direction:
        c, s = math.cos(angle), math.sin(angle)
        return Direction.from_components(c * self.vx - s * self.vy, s * self.vx + c * self.vy)

    def dot(self, other: Vec2 | Direction) -> float:
        return self.vx * other.x + self.vy * other.y

    def cross(self, other: Vec2 | Direction) -> float:
        return self.vx * other.y - self.vy * other.x


@dataclass(frozen=True)
class Ellipse:
    center: Vec2
    semi_major: float
    semi_minor: float
    rotation: float = 0.0

    @cached_property
    def axes(self) -> tuple[float, float]:
        return math.cos(self.rotation), math.sin(self.rotation)

    def to_local(self, p: Vec2) -> tuple[float, float]:
        c, s = self.axes
        dx, dy = p.x - self.center.x, p.y - self.center.y
        return dx * c + dy * s, -dx * s + dy * c

    def to_world(self, u: float, w: float) -> Vec2:
        c, s = self.axes
        return Vec2(self.center.x + u * c - w * s, self.center.y + u * s + w * c)

    def point_at(self, t: float) -> Vec2:
        return self.to_world(self.semi_major * math.cos(t), self.semi_minor * math.sin(t))

    def derivative_at(self, t: float) -> tuple[float, float]:
        """d/dt of ``point_at`` in world coordinates (counterclockwise)."""
        c, s = self.axes
        du, dw = -self.semi_major * math.sin(t), self.semi_minor * math.cos(t)
        return du * c - dw * s, du * s + dw * c

    def implicit(self, p: Vec2) -> float:
        u, w = self.to_local(p)
        return (u / self.semi_major) ** 2 + (w / self.semi_minor) ** 2 - 1.0

    def contains(self, p: Vec2) -> bool:
        return self.implicit(p) < 0.0

    def curvature_at_param(self, t: float) -> float:
        a, b = self.semi_major, self.semi_minor
        speed2 = (a * math.sin(t)) ** 2 + (b * math.cos(t)) ** 2
        return a * b / speed2**1.5

    def support(self, mx: float, my: float) -> float:
        """Support function h(m) = max over the ellipse of <p, m>."""
        c, s = self.axes
        mu, mw = mx * c + my * s, -mx * s + my * c
        return self.center.x * mx + self.center.y * my + math.hypot(self.semi_major * mu, self.semi_minor * mw)

    def boundary_points(self, n: int) -> np.ndarray:
        t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        c, s = self.axes
        u, w = self.semi_major * np.cos(t), self.semi_minor * np.sin(t)
        return np.column_stack((self.center.x + u * c - w * s, self.center.y + u * s + w * c))


def disc(cx: float, cy: float, r: float) -> Ellipse:
    return Ellipse(Vec2(cx, cy), r, r, 0.0)


@dataclass(frozen=True)
class Scene:
    ball_radius: float
    obstacles: tuple[Ellipse, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles", tuple(self.obstacles))

    @property
    def n_obstacles(self) -> int:
        return len(self.obstacles)

    def obstacle(self, index: int) -> Ellipse:
        if not 1 <= index <= len(self.obstacles):
            raise IndexError(f"Obstacle index {index} outside 1..{len(self.obstacles)}")
        return self.obstacles[index - 1]

    def with_ball_radius(self, a: float) -> Scene:
        return Scene(a, self.obstacles)


@dataclass(frozen=True)
class Miss:
    pass


@dataclass(frozen=True)
class Tangent:
    t: float
    point: Vec2


@dataclass(frozen=True)
class Transversal:
    t_enter: float
    t_exit: float
    p_enter: Vec2
    p_exit: Vec2


HitClass = Union[Miss, Tangent, Transversal]

MISS = Miss()


@dataclass(frozen=True)
class SceneReport:
    n_obstacles: int
    clearances: tuple[float, ...]
    min_gap: float
    min_curvatures: tuple[float, ...]


def ray_ellipse_intersect(
    origin: Vec2,
    direction: Direction,
    e: Ellipse,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> HitClass:
    """Classify the forward ray against ``e`` as Miss, Tangent or Transversal.

    The discriminant is compared against ``eps_tan`` times the scale
    ``b² + 4|ac|`` of the normalised quadratic. A ray whose origin lies on or
    inside the ellipse has no entry ahead of it and is reported as a Miss.
    """
    c, s = e.axes
    a_ax, b_ax = e.semi_major, e.semi_minor
    dx, dy = origin.x - e.center.x, origin.y - e.center.y
    ou = (dx * c + dy * s) / a_ax
    ow = (-dx * s + dy * c) / b_ax
    du = (direction.vx * c + direction.vy * s) / a_ax
    dw = (-direction.vx * s + direction.vy * c) / b_ax

    qa = du * du + dw * dw
    qb = 2.0 * (ou * du + ow * dw)
    qc = ou * ou + ow * ow - 1.0
    disc_value = qb * qb - 4.0 * qa * qc
    scale = qb * qb + 4.0 * abs(qa * qc)

    if disc_value < -eps_tan * scale:
        return MISS
    if abs(disc_value) <= eps_tan * scale:
        t = -qb / (2.0 * qa)
        if t <= 0.0:
            return MISS
        return Tangent(t, origin + direction.vec * t)

    root = math.sqrt(disc_value)
    q = -0.5 * (qb + math.copysign(root, qb))
    r1, r2 = q / qa, qc / q
    t_enter, t_exit = (r1, r2) if r1 < r2 else (r2, r1)
    if t_enter <= 0.0:
        return MISS
    return Transversal(
        t_enter,
        t_exit,
        origin + direction.vec * t_enter,
        origin + direction.vec * t_exit,
    )


def _require_on_boundary(e: Ellipse, p: Vec2) -> tuple[float, float]:
    u, w = e.to_local(p)
    a2, b2 = e.semi_major**2, e.semi_minor**2
    grad = 2.0 * math.hypot(u / a2, w / b2)
    value = u * u / a2 + w * w / b2 - 1.0
    if grad == 0.0 or abs(value) / grad > BOUNDARY_TOL:
        raise OffBoundaryError(
            f"Point ({p.x}, {p.y}) is not on the ellipse boundary (implicit value {value:.3e})"
        )
    return u, w


def outward_normal(e: Ellipse, p: Vec2) -> Direction:
    u, w = _require_on_boundary(e, p)
    gu, gw = u / e.semi_major**2, w / e.semi_minor**2
    c, s = e.axes
    return Direction.from_components(gu * c - gw * s, gu * s + gw * c)


def boundary_curvature(e: Ellipse, p: Vec2) -> float:
    u, w = _require_on_boundary(e, p)
    return e.curvature_at_param(math.atan2(w / e.semi_minor, u / e.semi_major))


def ellipse_area(e: Ellipse) -> float:
    return math.pi * e.semi_major * e.semi_minor


def ray_circle_exit(origin: Vec2, direction: Direction, a: float) -> tuple[float, Vec2]:
    """Leave the ball of radius ``a``: largest root of |origin + t·dir| = a."""
    r0 = origin.norm()
    if r0 > a + BOUNDARY_TOL:
        raise OutsideBallError(f"Origin ({origin.x}, {origin.y}) lies outside the ball of radius {a}")
    half_b = origin.dot(direction)
    c = r0 * r0 - a * a
    disc_value = max(half_b * half_b - c, 0.0)
    root = math.sqrt(disc_value)
    if half_b > 0.0:
        t = -c / (half_b + root) if half_b + root > 0.0 else 0.0
    else:
        t = -half_b + root
    t = max(t, 0.0)
    return t, origin + direction.vec * t


def ray_circle_entry(origin: Vec2, direction: Direction, a: float) -> float | None:
    """First time a ray started outside the ball enters it (None if it never does)."""
    half_b = origin.dot(direction)
    c = origin.dot(origin) - a * a
    if c <= 0.0:
        return 0.0
    disc_value = half_b * half_b - c
    if half_b >= 0.0 or disc_value <= 0.0:
        return None
    return c / (-half_b + math.sqrt(disc_value))


def require_admissible_point(scene: Scene, q: Vec2) -> None:
    """Reject positions outside the ball or in the open interior of an obstacle."""
    a = scene.ball_radius
    if q.norm() > a + BOUNDARY_TOL:
        raise OutsideBallError(f"Point ({q.x}, {q.y}) lies outside the ball of radius {a}")
    for index, e in enumerate(scene.obstacles, start=1):
        value = e.implicit(q)
        if value < -BOUNDARY_TOL:
            raise InsideObstacleError(
                index, f"point ({q.x}, {q.y}) is inside obstacle {index} (implicit value {value:.3e})"
            )


def _check_ellipse_shape(index: int, e: Ellipse) -> None:
    values = (e.center.x, e.center.y, e.semi_major, e.semi_minor, e.rotation)
    if not all(math.isfinite(v) for v in values):
        raise DegenerateEllipseError(index, "non-finite parameter")
    if e.semi_minor <= 0.0:
        raise DegenerateEllipseError(index, f"semi_minor must be positive, got {e.semi_minor}")
    if e.semi_major < e.semi_minor:
        raise DegenerateEllipseError(
            index, f"semi_major {e.semi_major} is smaller than semi_minor {e.semi_minor}"
        )
    if not 0.0 <= e.rotation < math.pi:
        raise DegenerateEllipseError(index, f"rotation {e.rotation} outside [0, pi)")
    if e.semi_minor / e.semi_major**2 <= 0.0:
        raise DegenerateEllipseError(index, "boundary curvature is not strictly positive")


def _max_radius(e: Ellipse) -> float:
    pts = e.boundary_points(720)
    r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
    k = int(np.argmax(r2))
    t0 = 2.0 * math.pi * k / 720.0
    step = 2.0 * math.pi / 720.0

    def neg_r2(t: float) -> float:
        p = e.point_at(t)
        return -(p.x * p.x + p.y * p.y)

    res = minimize_scalar(neg_r2, bounds=(t0 - step, t0 + step), method="bounded", options={"xatol": 1e-12})
    return math.sqrt(max(float(r2[k]), -float(res.fun)))


def _boundary_distance(e1: Ellipse, e2: Ellipse, n_starts: int = 4) -> float:
    n = 96
    p1, p2 = e1.boundary_points(n), e2.boundary_points(n)
    d2 = ((p1[:, None, :] - p2[None, :, :]) ** 2).sum(axis=2)
    flat = np.argsort(d2, axis=None)[:n_starts]
    grid = 2.0 * math.pi / n

    def dist2(params: np.ndarray) -> float:
        a = e1.point_at(float(params[0]))
        b = e2.point_at(float(params[1]))
        return (a.x - b.x) ** 2 + (a.y - b.y) ** 2

    best = float(d2.min())
    for idx in flat:
        i, j = np.unravel_index(int(idx), d2.shape)
        res = minimize(
            dist2,
            x0=np.array([i * grid, j * grid]),
            method="Nelder-Mead",
            options={"xatol": VALIDATION_TOL, "fatol": VALIDATION_TOL**2, "maxiter": 2000},
        )
        best = min(best, float(res.fun))
    return math.sqrt(max(best, 0.0))


def validate_scene(scene: Scene) -> SceneReport:
    """Check shapes, containment with clearance, and pairwise disjointness with a gap."""
    a = scene.ball_radius
    if not (math.isfinite(a) and a > 0.0):
        raise SceneValidationError(f"Ball radius must be positive and finite, got {a}")
    clearance_floor = CLEARANCE_FRACTION * a
    gap_floor = GAP_FRACTION * a

    clearances: list[float] = []
    curvatures: list[float] = []
    for index, e in enumerate(scene.obstacles, start=1):
        _check_ellipse_shape(index, e)
        curvatures.append(e.semi_minor / e.semi_major**2)
        clearance = a - _max_radius(e)
        if clearance < clearance_floor:
            raise TooCloseToBallError(index, f" (max |p| = {a - clearance:.6g}, ball radius {a})")
        clearances.append(clearance)

    min_gap = math.inf
    for i, ei in enumerate(scene.obstacles, start=1):
        for j in range(i + 1, scene.n_obstacles + 1):
            ej = scene.obstacle(j)
            centre_gap = (ei.center - ej.center).norm() - ei.semi_major - ej.semi_major
            if centre_gap > gap_floor:
                min_gap = min(min_gap, centre_gap)
                continue
            if ei.contains(ej.center) or ej.contains(ei.center):
                raise OverlapError(i, j, " (one centre lies inside the other obstacle)")
            gap = _boundary_distance(ei, ej)
            if gap < gap_floor:
                raise OverlapError(i, j, f" (boundary gap {gap:.3e} below {gap_floor:.3e})")
            min_gap = min(min_gap, gap)

    logger.debug(
        f"Scene validated: a={a}, {scene.n_obstacles} obstacles, "
        f"min clearance {min(clearances, default=math.inf):.6g}, min gap {min_gap:.6g}"
    )
    return SceneReport(
        n_obstacles=scene.n_obstacles,
        clearances=tuple(clearances),
        min_gap=min_gap,
        min_curvatures=tuple(curvatures),
    )
