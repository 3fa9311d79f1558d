"""Liouville quadrature of the travelling time, the Santaló defect, and trapped-fraction decay.

The measure on the inward cylinder is dμ = a·dpsi·cos(phi)·dphi. Integrating
t_K against it reproduces the phase volume of the region between the ball and
the obstacles, 2π(πa² − Σ|K_i|), whenever the trapped set has measure zero;
the difference is reported as the defect.

Nodes that hit a reflection or time cap contribute nothing to the integral and
their full weight to ``excluded_weight``, which bounds the error from
unresolved trapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from loguru import logger
from scipy.stats import linregress
from tqdm import tqdm

from _billiard import DEFAULT_MAX_REFLECTIONS, DEFAULT_MAX_TIME, trace
from _geometry import DEFAULT_EPS_TAN, Scene, ellipse_area
from _spectra import (
    SpectrumRecord,
    TravelStatus,
    boundary_phase_point,
    travelling_time_spectrum,
)


@dataclass(frozen=True)
class SantaloReport:
    integral: float
    phase_volume: float
    defect: float
    excluded_weight: float
    grid: tuple[int, int]
    n_cutoff: int = 0
    max_finite_t: float = 0.0

    @property
    def relative_defect(self) -> float:
        return self.defect / self.phase_volume

    @property
    def error_bar(self) -> float:
        """Largest contribution the excluded nodes could make at the longest observed time."""
        return self.excluded_weight * self.max_finite_t


@dataclass(frozen=True)
class EscapeRateFit:
    gamma: float
    intercept: float
    r_value: float
    n_points: int


def phase_volume(scene: Scene) -> float:
    a = scene.ball_radius
    return 2.0 * math.pi * (math.pi * a * a - math.fsum(ellipse_area(e) for e in scene.obstacles))


def _node_weight(a: float, phi: float, n_psi: int, n_phi: int) -> float:
    return a * (2.0 * math.pi / n_psi) * math.cos(phi) * (math.pi / n_phi)


def _integrate_records(
    records: Sequence[SpectrumRecord], a: float, n_psi: int, n_phi: int
) -> tuple[float, float, int, float]:
    terms: list[float] = []
    excluded: list[float] = []
    max_t = 0.0
    for rec in records:
        w = _node_weight(a, rec.phi, n_psi, n_phi)
        if rec.status is TravelStatus.FINITE:
            terms.append(rec.t * w)
            max_t = max(max_t, rec.t)
        elif rec.status is TravelStatus.CUTOFF:
            excluded.append(w)
    return math.fsum(terms), math.fsum(excluded), len(excluded), max_t


def liouville_integral_from_records(
    records: Sequence[SpectrumRecord], a: float, n_psi: int, n_phi: int
) -> tuple[float, float]:
    """Quadrature over an already sampled spectrum on the (n_psi, n_phi) midpoint grid."""
    if len(records) != n_psi * n_phi:
        raise ValueError(f"Expected {n_psi * n_phi} records for a {n_psi}x{n_phi} grid, got {len(records)}")
    integral, excluded, _, _ = _integrate_records(records, a, n_psi, n_phi)
    return integral, excluded


def liouville_integral(
    scene: Scene,
    n_psi: int,
    n_phi: int,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
    show_progress: bool = False,
) -> tuple[float, float]:
    records = travelling_time_spectrum(
        scene, n_psi, n_phi, max_reflections, max_time, eps_tan=eps_tan, show_progress=show_progress
    )
    return liouville_integral_from_records(records, scene.ball_radius, n_psi, n_phi)


def santalo_defect(
    scene: Scene,
    n_psi: int,
    n_phi: int,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
    show_progress: bool = False,
) -> SantaloReport:
    records = travelling_time_spectrum(
        scene, n_psi, n_phi, max_reflections, max_time, eps_tan=eps_tan, show_progress=show_progress
    )
    integral, excluded, n_cutoff, max_t = _integrate_records(records, scene.ball_radius, n_psi, n_phi)
    volume = phase_volume(scene)
    report = SantaloReport(
        integral=integral,
        phase_volume=volume,
        defect=volume - integral,
        excluded_weight=excluded,
        grid=(n_psi, n_phi),
        n_cutoff=n_cutoff,
        max_finite_t=max_t,
    )
    if n_cutoff:
        logger.warning(f"{n_cutoff} of {len(records)} nodes hit a cap; excluded weight {excluded:.6g}")
    logger.info(
        f"Santaló {n_psi}x{n_phi}: integral {integral:.10g}, phase volume {volume:.10g}, "
        f"relative defect {report.relative_defect:.3e}"
    )
    return report


def sample_inward_cylinder(n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw (psi, phi) from μ normalized: psi uniform, phi with density cos(phi)/2."""
    rng = np.random.default_rng(seed)
    psi = rng.uniform(0.0, 2.0 * math.pi, size=n_samples)
    phi = np.arcsin(2.0 * rng.uniform(0.0, 1.0, size=n_samples) - 1.0)
    return psi, phi


def trapped_fraction(
    scene: Scene,
    n_samples: int,
    seed: int,
    reflection_cutoffs: Sequence[int],
    max_time: float = DEFAULT_MAX_TIME,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
    show_progress: bool = False,
) -> list[tuple[int, float]]:
    """Share of μ-distributed boundary samples that reach each reflection cutoff.

    Each sample is traced once with the largest cutoff as cap; it trips cutoff
    ``c`` exactly when it makes at least ``c`` reflections.
    """
    cutoffs = [int(c) for c in reflection_cutoffs]
    if not cutoffs:
        raise ValueError("At least one reflection cutoff is required")
    if any(c < 1 for c in cutoffs) or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise ValueError(f"Cutoffs must be positive and strictly increasing, got {cutoffs}")
    if n_samples < 1:
        raise ValueError(f"n_samples must be at least 1, got {n_samples}")

    psi, phi = sample_inward_cylinder(n_samples, seed)
    cap = cutoffs[-1]
    counts = np.empty(n_samples, dtype=np.int64)
    progress = tqdm(range(n_samples), desc="Trapped-fraction samples", unit="ray", leave=False, disable=not show_progress)
    for k in progress:
        x = boundary_phase_point(scene.ball_radius, float(psi[k]), float(phi[k]))
        counts[k] = trace(scene, x, cap, max_time, eps_tan=eps_tan).n_reflections

    fractions = [(c, float(np.count_nonzero(counts >= c)) / n_samples) for c in cutoffs]
    logger.debug(f"Trapped fractions ({n_samples} samples, seed {seed}): {fractions}")
    return fractions


def escape_rate(fractions: Sequence[tuple[int, float]]) -> EscapeRateFit:
    """Fit log fraction(n) ≈ intercept − gamma·n over the strictly positive entries."""
    points = [(c, f) for c, f in fractions if f > 0.0]
    if len(points) < 2:
        raise ValueError(f"Escape-rate fit needs at least two positive fractions, got {len(points)}")
    n = np.array([c for c, _ in points], dtype=float)
    log_f = np.log(np.array([f for _, f in points], dtype=float))
    fit = linregress(n, log_f)
    return EscapeRateFit(
        gamma=-float(fit.slope),
        intercept=float(fit.intercept),
        r_value=float(fit.rvalue),
        n_points=len(points),
    )
