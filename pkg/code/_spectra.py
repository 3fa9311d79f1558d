"""Travelling-time spectrum on the inward phase cylinder over S0, and the scattering length spectrum.

**Chart of the inward cylinder.** ``psi`` is the polar angle of q on S0 and
``phi`` the signed angle from the inward normal ν(q) = −(cos psi, sin psi) to
v, positive counterclockwise. So q = a(cos psi, sin psi) and
v = (−cos(psi + phi), −sin(psi + phi)); |phi| = π/2 is grazing.

**Grids.** Both the spectrum and the SLS use midpoint grids in row-major order
(outer index psi / omega, inner index phi / b), so no node sits on the grazing
set and outputs are reproducible record for record.

**Sojourn times.** For an (ω, θ)-ray with first and last reflection points
q_f, q_l and polyline length Σ between them, the length between the tangent
lines Z_ω and Z_{−θ} is (a + <q_f, ω>) + Σ + (a − <q_l, θ>); subtracting 2a
gives a value that does not depend on the ball radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from tqdm import tqdm

from _billiard import (
    DEFAULT_MAX_REFLECTIONS,
    DEFAULT_MAX_TIME,
    PhasePoint,
    Trajectory,
    enter_ball,
    trace,
)
from _geometry import DEFAULT_EPS_TAN, Direction, Scene, Vec2


GRAZING_TOL = 1e-12


class SojournUndefinedError(ValueError):
    pass


class TravelStatus(str, Enum):
    FINITE = "finite"
    GRAZING = "grazing"
    CUTOFF = "cutoff"


@dataclass(frozen=True)
class TravellingTime:
    status: TravelStatus
    t: float
    reflections: int = 0
    tangencies: int = 0


@dataclass(frozen=True)
class SpectrumRecord:
    psi: float
    phi: float
    status: TravelStatus
    t: float
    reflections: int
    tangencies: int


@dataclass(frozen=True)
class SLSRecord:
    omega_angle: float
    b: float
    theta: Direction
    sojourn: float
    reflections: int
    tangential: bool
    exited: bool


def boundary_phase_point(a: float, psi: float, phi: float) -> PhasePoint:
    q = Vec2(a * math.cos(psi), a * math.sin(psi))
    v = Direction(-math.cos(psi + phi), -math.sin(psi + phi))
    return PhasePoint(q, v)


def midpoints(n: int, low: float, high: float) -> list[float]:
    if n < 1:
        raise ValueError(f"Grid size must be at least 1, got {n}")
    step = (high - low) / n
    return [low + step * (i + 0.5) for i in range(n)]


def psi_phi_grid(n_psi: int, n_phi: int) -> tuple[list[float], list[float]]:
    return midpoints(n_psi, 0.0, 2.0 * math.pi), midpoints(n_phi, -0.5 * math.pi, 0.5 * math.pi)


def travelling_time(
    scene: Scene,
    psi: float,
    phi: float,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> TravellingTime:
    """t_K at the boundary sample (psi, phi); 0 at grazing starts."""
    if abs(phi) >= 0.5 * math.pi - GRAZING_TOL:
        return TravellingTime(TravelStatus.GRAZING, 0.0)
    x = boundary_phase_point(scene.ball_radius, psi, phi)
    tr = trace(scene, x, max_reflections, max_time, eps_tan=eps_tan)
    if not tr.exited:
        return TravellingTime(TravelStatus.CUTOFF, math.nan, tr.n_reflections, tr.n_tangencies)
    return TravellingTime(TravelStatus.FINITE, tr.interior_time, tr.n_reflections, tr.n_tangencies)


def travelling_time_spectrum(
    scene: Scene,
    n_psi: int,
    n_phi: int,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
    show_progress: bool = False,
) -> list[SpectrumRecord]:
    psis, phis = psi_phi_grid(n_psi, n_phi)
    records: list[SpectrumRecord] = []
    for psi in tqdm(psis, desc="Spectrum rows", unit="row", leave=False, disable=not show_progress):
        for phi in phis:
            tt = travelling_time(scene, psi, phi, max_reflections, max_time, eps_tan=eps_tan)
            records.append(SpectrumRecord(psi, phi, tt.status, tt.t, tt.reflections, tt.tangencies))
    return records


def sojourn_time(tr: Trajectory, omega: Direction, theta: Direction, a: float) -> float:
    if not tr.exited:
        raise SojournUndefinedError("Sojourn time is undefined for a trajectory that did not exit")
    points = [ev.point for ev in tr.reflections]
    if not points:
        return 0.0
    sigma = math.fsum((points[k + 1] - points[k]).norm() for k in range(len(points) - 1))
    incoming = a + points[0].dot(omega)
    outgoing = a - points[-1].dot(theta)
    return math.fsum((incoming, sigma, outgoing)) - 2.0 * a


def shoot_from_zline(
    scene: Scene,
    omega_angle: float,
    b: float,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
) -> tuple[Trajectory, SLSRecord]:
    """Launch the ray with direction ω and impact parameter ``b`` from Z_ω and trace it."""
    a = scene.ball_radius
    if not abs(b) < a:
        raise ValueError(f"Impact parameter |b| = {abs(b)} must be below the ball radius {a}")
    omega = Direction.from_angle(omega_angle)
    launch = Vec2(-a * omega.vx, -a * omega.vy) + omega.perp().vec * b
    entry = enter_ball(scene, PhasePoint(launch, omega))
    if entry is None:
        raise ValueError(f"Ray with impact parameter {b} does not meet the ball")
    _, start = entry

    tr = trace(scene, start, max_reflections, max_time, eps_tan=eps_tan)
    if tr.exited:
        theta = tr.status.exit.v
        sojourn = sojourn_time(tr, omega, theta, a)
    else:
        theta = tr.end.v
        sojourn = math.nan
    record = SLSRecord(
        omega_angle=omega_angle,
        b=b,
        theta=theta,
        sojourn=sojourn,
        reflections=tr.n_reflections,
        tangential=tr.n_tangencies > 0,
        exited=tr.exited,
    )
    return tr, record


def sls_sample(
    scene: Scene,
    n_omega: int,
    n_b: int,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
    show_progress: bool = False,
) -> list[SLSRecord]:
    a = scene.ball_radius
    omegas = midpoints(n_omega, 0.0, 2.0 * math.pi)
    impacts = midpoints(n_b, -a, a)
    records: list[SLSRecord] = []
    for omega_angle in tqdm(omegas, desc="SLS rows", unit="row", leave=False, disable=not show_progress):
        for b in impacts:
            _, record = shoot_from_zline(scene, omega_angle, b, max_reflections, max_time, eps_tan=eps_tan)
            records.append(record)
    return records
