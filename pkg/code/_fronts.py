"""Convex wavefronts: involutes of elliptic boundaries, curvature transport, perpendicular hits.

Front curvature ``kappa`` is measured in the direction of motion: 0 is a flat
front, positive values are diverging (convex) fronts. Free flight over time t
maps kappa to kappa / (1 + t·kappa); a non-tangential reflection at a boundary
of curvature kappa_b with incidence cosine cos(phi) maps kappa to
kappa + 2·kappa_b / cos(phi). Both keep kappa >= 0 among convex obstacles.

The involute of an elliptic arc with string length c − s is the convex curve
whose normal lines are exactly the tangent lines of the ellipse, with
curvature 1 / (c − s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.integrate import quad
from scipy.optimize import brentq

from _billiard import (
    DEFAULT_MAX_REFLECTIONS,
    DEFAULT_MAX_TIME,
    BilliardInvariantError,
    CutoffReflections,
    Exited,
    PhasePoint,
    Trajectory,
    flow_to,
    itinerary,
    reflect,
    trace,
)
from _geometry import (
    DEFAULT_EPS_TAN,
    Direction,
    Ellipse,
    Scene,
    Vec2,
    boundary_curvature,
    outward_normal,
)


ARC_LENGTH_TOL = 1e-10
DEFAULT_FD_STEP = 1e-5
INTERSECTION_SLACK = 1e-12
DEFAULT_HIT_TOL = 1e-9


class GrazingFrontError(ValueError):
    pass


class NonSmoothVariationError(ValueError):
    pass


class InvoluteWindowError(ValueError):
    pass


class CurveIntersectionError(ValueError):
    pass


class NotStrictlyConvexError(ValueError):
    pass


@dataclass(frozen=True)
class FrontState:
    point: Vec2
    dir: Direction
    kappa: float
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class SampledCurve:
    """Sampled planar curve: arc-length params, (n, 2) points and normals, curvatures."""

    params: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    curvatures: np.ndarray

    def __post_init__(self) -> None:
        params = np.asarray(self.params, dtype=float)
        points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        normals = np.asarray(self.normals, dtype=float).reshape(-1, 2)
        curvatures = np.asarray(self.curvatures, dtype=float)
        n = len(params)
        if n < 3 or not (len(points) == len(normals) == len(curvatures) == n):
            raise ValueError(
                f"Sampled curve needs at least 3 samples of equal length, got "
                f"{n}/{len(points)}/{len(normals)}/{len(curvatures)}"
            )
        if np.any(np.diff(params) <= 0.0):
            raise ValueError("Sampled curve params must be strictly increasing")
        if np.any(np.hypot(*np.diff(points, axis=0).T) == 0.0):
            raise ValueError("Consecutive sample points must be distinct")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "curvatures", curvatures)

    def __len__(self) -> int:
        return len(self.params)

    def point(self, i: int) -> Vec2:
        return Vec2(float(self.points[i, 0]), float(self.points[i, 1]))

    def normal(self, i: int) -> Direction:
        return Direction.from_components(float(self.normals[i, 0]), float(self.normals[i, 1]))


@dataclass(frozen=True)
class PerpendicularHit:
    param_y: float
    param_x: float
    point_y: Vec2
    point_x: Vec2


@dataclass(frozen=True)
class PerpendicularHits:
    hits: tuple[PerpendicularHit, ...]
    degenerate: bool

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return [(h.param_y, h.param_x) for h in self.hits]

    def __len__(self) -> int:
        return len(self.hits)

    def __iter__(self):
        return iter(self.hits)


def _is_circle(e: Ellipse) -> bool:
    return e.semi_major == e.semi_minor


def _speed(e: Ellipse, t: float) -> float:
    return math.hypot(e.semi_major * math.sin(t), e.semi_minor * math.cos(t))


def ellipse_arc_length(e: Ellipse, t0: float, t1: float) -> float:
    """Counterclockwise arc length of ∂e between parameters t0 and t1."""
    if _is_circle(e):
        return e.semi_major * (t1 - t0)
    value, _ = quad(lambda t: _speed(e, t), t0, t1, epsabs=ARC_LENGTH_TOL, epsrel=ARC_LENGTH_TOL, limit=200)
    return float(value)


def ellipse_perimeter(e: Ellipse) -> float:
    return ellipse_arc_length(e, 0.0, 2.0 * math.pi)


def param_at_arc_length(e: Ellipse, s: float) -> float:
    """Inverse of ``ellipse_arc_length(e, 0, t)`` for any real s."""
    if _is_circle(e):
        return s / e.semi_major
    perimeter = ellipse_perimeter(e)
    turns = math.floor(s / perimeter)
    rest = s - turns * perimeter
    if rest <= 0.0:
        return 2.0 * math.pi * turns
    t = brentq(lambda u: ellipse_arc_length(e, 0.0, u) - rest, 0.0, 2.0 * math.pi, xtol=1e-14, rtol=1e-14)
    return 2.0 * math.pi * turns + t


def _unit_tangent(e: Ellipse, t: float, orientation: int) -> tuple[float, float]:
    dx, dy = e.derivative_at(t)
    speed = math.hypot(dx, dy)
    return orientation * dx / speed, orientation * dy / speed


def sampled_curvature(points: np.ndarray) -> np.ndarray:
    """Signed curvature from the circle through each triple of consecutive points.

    Positive for counterclockwise turning; the two end samples copy their
    neighbours.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise ValueError(f"Need at least 3 points for sampled curvature, got {len(pts)}")
    a, b, c = pts[:-2], pts[1:-1], pts[2:]
    ab, bc, ac = b - a, c - b, c - a
    cross = ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0]
    denom = np.hypot(*ab.T) * np.hypot(*bc.T) * np.hypot(*ac.T)
    inner = 2.0 * cross / denom
    return np.concatenate(([inner[0]], inner, [inner[-1]]))


def sample_ellipse_arc(e: Ellipse, t0: float, t1: float, n: int) -> SampledCurve:
    """Counterclockwise arc of ∂e from parameter t0 to t1 with outward normals."""
    if n < 3:
        raise ValueError(f"n must be at least 3, got {n}")
    if not t1 > t0:
        raise ValueError(f"Arc needs t1 > t0, got [{t0}, {t1}]")
    ts = np.linspace(t0, t1, n)
    points = np.array([e.point_at(float(t)).as_tuple() for t in ts])
    normals = np.empty((n, 2))
    for k, t in enumerate(ts):
        dx, dy = e.derivative_at(float(t))
        speed = math.hypot(dx, dy)
        normals[k] = (dy / speed, -dx / speed)
    params = np.array([ellipse_arc_length(e, t0, float(t)) for t in ts])
    curvatures = np.array([e.curvature_at_param(float(t)) for t in ts])
    return SampledCurve(params, points, normals, curvatures)


def _require_strictly_convex(curve: SampledCurve, name: str) -> None:
    k = sampled_curvature(curve.points)
    if not (np.all(k > 0.0) or np.all(k < 0.0)):
        raise NotStrictlyConvexError(
            f"Curve {name} is not strictly convex (sampled curvature in [{k.min():.3e}, {k.max():.3e}])"
        )


def involute(
    e: Ellipse,
    s0: float,
    eps0: float,
    delta: float,
    orientation: int = 1,
    n_samples: int = 64,
) -> SampledCurve:
    """Involute y(s) = x(s) + (c − s)·x′(s), c = s0 + eps0, over the window t(s) = c − s ∈ [delta, eps0].

    ``x`` is the arc-length parametrization of ∂e starting at parameter 0,
    counterclockwise for ``orientation=+1`` and clockwise for ``-1``. Normals
    of the returned curve are x′(s).
    """
    if orientation not in (1, -1):
        raise ValueError(f"orientation must be +1 or -1, got {orientation}")
    if not 0.0 < delta < eps0:
        raise InvoluteWindowError(f"Need 0 < delta < eps0, got delta={delta}, eps0={eps0}")
    if n_samples < 3:
        raise InvoluteWindowError(f"n_samples must be at least 3, got {n_samples}")

    c = s0 + eps0
    s_values = np.linspace(s0, c - delta, n_samples)
    points = np.empty((n_samples, 2))
    normals = np.empty((n_samples, 2))
    for k, s in enumerate(s_values):
        t = orientation * param_at_arc_length(e, float(s))
        x = e.point_at(t)
        tx, ty = _unit_tangent(e, t, orientation)
        string = c - float(s)
        points[k] = (x.x + string * tx, x.y + string * ty)
        normals[k] = (tx, ty)
    curvatures = 1.0 / (c - s_values)
    return SampledCurve(s_values, points, normals, curvatures)


def check_normal_tangency(y: SampledCurve, e: Ellipse) -> float:
    """Largest distance between a normal line of ``y`` and the nearest tangent line of ∂e with the same direction."""
    worst = 0.0
    for k in range(len(y)):
        nx, ny = y.normals[k]
        norm = math.hypot(nx, ny)
        mx, my = -ny / norm, nx / norm
        offset = y.points[k, 0] * mx + y.points[k, 1] * my
        deviation = min(abs(offset - e.support(mx, my)), abs(offset + e.support(-mx, -my)))
        worst = max(worst, deviation)
    return worst


def _fly(kappa: float, t: float) -> float:
    return kappa / (1.0 + t * kappa)


def _propagate(
    scene: Scene,
    start: FrontState,
    max_reflections: int,
    max_time: float,
    eps_tan: float,
) -> tuple[list[FrontState], Trajectory]:
    if not (math.isfinite(start.kappa) and start.kappa >= 0.0):
        raise ValueError(f"Front curvature must be finite and >= 0, got {start.kappa}")
    tr = trace(scene, PhasePoint(start.point, start.dir), max_reflections, max_time, eps_tan=eps_tan)

    states: list[FrontState] = []
    kappa = start.kappa
    direction = start.dir
    elapsed = 0.0
    for ev in tr.events:
        if ev.tangential:
            raise GrazingFrontError(
                f"Front propagation undefined at grazing: tangential hit on obstacle {ev.obstacle_index} "
                f"at t={ev.time:.12g}"
            )
        e = scene.obstacle(ev.obstacle_index)
        kappa = _fly(kappa, ev.time - elapsed)
        kappa = kappa + 2.0 * boundary_curvature(e, ev.point) / ev.cos_incidence
        direction = reflect(direction, outward_normal(e, ev.point))
        elapsed = ev.time
        states.append(FrontState(ev.point, direction, kappa, elapsed))

    if isinstance(tr.status, CutoffReflections):
        logger.warning(f"Front propagation stopped at the reflection cap ({tr.status.n})")
        return states, tr
    end_time = tr.status.exit_time if isinstance(tr.status, Exited) else tr.interior_time
    states.append(FrontState(tr.end.q, tr.end.v, _fly(kappa, end_time - elapsed), end_time))
    return states, tr


def propagate_front(
    scene: Scene,
    start: FrontState,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> list[FrontState]:
    """Front curvature along the trajectory of (point, dir): one state per reflection plus the final one.

    The final state sits at the ball exit, or at ``max_time`` when the time
    cap trips first; there is none when the reflection cap trips.
    """
    states, _ = _propagate(scene, start, max_reflections, max_time, eps_tan)
    return states



def front_at(
    scene: Scene,
    start: FrontState,
    T: float,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> FrontState:
    """Front state at time ``T``, continuing in free flight after the ball exit."""
    states, tr = _propagate(scene, start, max_reflections, T, eps_tan)
    if isinstance(tr.status, CutoffReflections):
        raise BilliardInvariantError(f"Reflection cap {max_reflections} reached before time {T}")
    last = states[-1]
    if last.time < T:
        extra = T - last.time
        return FrontState(last.point + last.dir.vec * extra, last.dir, _fly(last.kappa, extra), T)
    return last


def _offset_rays(x: PhasePoint, h: float, kappa0: float) -> tuple[PhasePoint, PhasePoint]:
    side = x.v.perp()
    if kappa0 == 0.0:
        return (
            PhasePoint(x.q + side.vec * h, x.v),
            PhasePoint(x.q - side.vec * h, x.v),
        )
    radius = 1.0 / kappa0
    focus = x.q - x.v.vec * radius
    angle = h / radius
    plus, minus = x.v.rotated(angle), x.v.rotated(-angle)
    return (
        PhasePoint(focus + plus.vec * radius, plus),
        PhasePoint(focus + minus.vec * radius, minus),
    )


def finite_difference_curvature(
    scene: Scene,
    x: PhasePoint,
    h: float = DEFAULT_FD_STEP,
    T: float = 1.0,
    kappa0: float = 0.0,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> float:
    """Front curvature at time T estimated from two neighbouring rays on the front through ``x``.

    The neighbours sit at arc distance ``h`` on either side of ``x`` along a
    front of curvature ``kappa0``; after flowing for T the estimate is
    <d₊ − d₋, u> / |p₊ − p₋| with u the unit chord between the end points.
    """
    if not h > 0.0:
        raise ValueError(f"Step h must be positive, got {h}")
    if kappa0 < 0.0:
        raise ValueError(f"kappa0 must be >= 0, got {kappa0}")
    plus, minus = _offset_rays(x, h, kappa0)

    _, centre_tr = flow_to(scene, x, T, max_reflections, eps_tan=eps_tan)
    end_plus, tr_plus = flow_to(scene, plus, T, max_reflections, eps_tan=eps_tan)
    end_minus, tr_minus = flow_to(scene, minus, T, max_reflections, eps_tan=eps_tan)

    routes = [itinerary(tr) if tr is not None else () for tr in (centre_tr, tr_plus, tr_minus)]
    if len(set(routes)) != 1:
        raise NonSmoothVariationError(f"Non-smooth variation: neighbouring itineraries differ {routes}")
    for tr in (centre_tr, tr_plus, tr_minus):
        if tr is not None and tr.n_tangencies:
            raise NonSmoothVariationError("Non-smooth variation: a neighbouring ray passes a tangency")

    chord = end_plus.q - end_minus.q
    length = chord.norm()
    if length == 0.0:
        raise NonSmoothVariationError("Neighbouring rays meet at time T (focal point)")
    spread = end_plus.v.vec - end_minus.v.vec
    return spread.dot(chord) / (length * length)


def _segments_cross(y: np.ndarray, x: np.ndarray) -> bool:
    p, r = y[:-1, None, :], (y[1:] - y[:-1])[:, None, :]
    q, s = x[None, :-1, :], (x[1:] - x[:-1])[None, :, :]
    rxs = r[..., 0] * s[..., 1] - r[..., 1] * s[..., 0]
    qp = q - p
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (qp[..., 0] * s[..., 1] - qp[..., 1] * s[..., 0]) / rxs
        u = (qp[..., 0] * r[..., 1] - qp[..., 1] * r[..., 0]) / rxs
    inside = (rxs != 0.0) & (t >= 0.0) & (t <= 1.0) & (u >= 0.0) & (u <= 1.0)
    return bool(np.any(inside))


def _ray_polyline(origin: np.ndarray, direction: np.ndarray, target: SampledCurve) -> tuple[int, float] | None:
    """Nearest forward hit of a ray with the target polyline as (segment index, fraction)."""
    starts = target.points[:-1]
    seg = target.points[1:] - starts
    denom = direction[0] * seg[:, 1] - direction[1] * seg[:, 0]
    rel = starts - origin
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rel[:, 0] * seg[:, 1] - rel[:, 1] * seg[:, 0]) / denom
        u = (rel[:, 0] * direction[1] - rel[:, 1] * direction[0]) / denom
    ok = (denom != 0.0) & (t > 0.0) & (u >= -INTERSECTION_SLACK) & (u <= 1.0 + INTERSECTION_SLACK)
    if not np.any(ok):
        return None
    k = int(np.argmin(np.where(ok, t, np.inf)))
    return k, float(min(max(u[k], 0.0), 1.0))


def _interp_ray(y: SampledCurve, s: float) -> tuple[np.ndarray, np.ndarray, float]:
    i = min(int(math.floor(s)), len(y) - 2)
    f = s - i
    origin = (1.0 - f) * y.points[i] + f * y.points[i + 1]
    direction = (1.0 - f) * y.normals[i] + f * y.normals[i + 1]
    direction = direction / np.hypot(*direction)
    param = (1.0 - f) * y.params[i] + f * y.params[i + 1]
    return origin, direction, float(param)


def _orthogonality(y: SampledCurve, target: SampledCurve, s: float) -> tuple[float, PerpendicularHit | None]:
    """cross(ray direction, target normal) at fractional sample index ``s`` of ``y``; nan on a miss."""
    origin, direction, param_y = _interp_ray(y, s)
    hit = _ray_polyline(origin, direction, target)
    if hit is None:
        return math.nan, None
    k, u = hit
    point = (1.0 - u) * target.points[k] + u * target.points[k + 1]
    normal = (1.0 - u) * target.normals[k] + u * target.normals[k + 1]
    normal = normal / np.hypot(*normal)
    g = float(direction[0] * normal[1] - direction[1] * normal[0])
    param_x = float((1.0 - u) * target.params[k] + u * target.params[k + 1])
    return g, PerpendicularHit(
        param_y,
        param_x,
        Vec2(float(origin[0]), float(origin[1])),
        Vec2(float(point[0]), float(point[1])),
    )


def perpendicular_hits(y: SampledCurve, x_target: SampledCurve, tol: float = DEFAULT_HIT_TOL) -> PerpendicularHits:
    """Samples of ``y`` whose normal ray meets ``x_target`` orthogonally to its tangent.

    Exact zeros (|g| <= tol) are collected directly and adjacent runs merged;
    sign changes between consecutive hitting samples are polished with brentq.
    When more than half of the samples are zeros the configuration is
    degenerate (e.g. concentric arcs) and every zero is reported unmerged.
    """
    _require_strictly_convex(y, "Y")
    _require_strictly_convex(x_target, "X")
    if _segments_cross(y.points, x_target.points):
        raise CurveIntersectionError("Curves Y and X intersect; perpendicular hits need disjoint curves")

    n = len(y)
    evaluated = [_orthogonality(y, x_target, float(i)) for i in range(n)]
    g = np.array([v for v, _ in evaluated])
    zero = np.abs(g) <= tol

    if np.count_nonzero(zero) * 2 > n:
        logger.warning(f"Degenerate perpendicular-hit configuration: {np.count_nonzero(zero)} of {n} samples")
        hits = tuple(evaluated[i][1] for i in range(n) if zero[i])
        return PerpendicularHits(hits, degenerate=True)

    found: list[tuple[float, PerpendicularHit]] = []
    i = 0
    while i < n:
        if zero[i]:
            j = i
            while j + 1 < n and zero[j + 1]:
                j += 1
            mid = (i + j) // 2
            found.append((float(mid), evaluated[mid][1]))
            i = j + 1
            continue
        i += 1

    for i in range(n - 1):
        gi, gj = g[i], g[i + 1]
        if zero[i] or zero[i + 1] or not (np.isfinite(gi) and np.isfinite(gj)) or gi * gj > 0.0:
            continue
        try:
            root = brentq(lambda s: _orthogonality(y, x_target, s)[0], float(i), float(i + 1), xtol=1e-13)
        except ValueError:
            root = i + gi / (gi - gj)
        _, hit = _orthogonality(y, x_target, root)
        if hit is not None:
            found.append((root, hit))

    found.sort(key=lambda item: item[0])
    return PerpendicularHits(tuple(hit for _, hit in found), degenerate=False)
