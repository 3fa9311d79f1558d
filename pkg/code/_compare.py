"""Node-wise comparison of travelling-time spectra and the grid-relative verdict.

An ``IndistinguishableAtGrid`` verdict only says that no node of the tested
grid separates the two scenes within ``tol``; it never claims the obstacles
are equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from loguru import logger

from _billiard import DEFAULT_MAX_REFLECTIONS, DEFAULT_MAX_TIME
from _geometry import DEFAULT_EPS_TAN, Scene
from _spectra import SpectrumRecord, TravelStatus, travelling_time_spectrum


DEFAULT_COMPARE_TOL = 1e-7


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Witness:
    psi: float
    phi: float
    t_a: float
    t_b: float

    @property
    def delta(self) -> float:
        return self.t_a - self.t_b


@dataclass(frozen=True)
class StatusMismatch:
    psi: float
    phi: float
    status_a: TravelStatus
    status_b: TravelStatus


@dataclass(frozen=True)
class DisagreementReport:
    grid: tuple[int, int]
    compared: int
    n_disagree: int
    disagree_fraction: float
    max_abs_delta: float
    witness: Optional[Witness]
    status_mismatches: tuple[StatusMismatch, ...] = field(default_factory=tuple)

    @property
    def is_different(self) -> bool:
        return self.disagree_fraction > 0.0 or bool(self.status_mismatches)


@dataclass(frozen=True)
class IndistinguishableAtGrid:
    report: DisagreementReport


@dataclass(frozen=True)
class Different:
    report: DisagreementReport


Verdict = Union[IndistinguishableAtGrid, Different]


def infer_grid(records: Sequence[SpectrumRecord]) -> tuple[int, int]:
    """(n_psi, n_phi) of a row-major spectrum."""
    if not records:
        raise GridMismatchError("Empty spectrum has no grid")
    n_psi = len({rec.psi for rec in records})
    if len(records) % n_psi:
        raise GridMismatchError(f"{len(records)} records do not tile {n_psi} psi rows")
    return n_psi, len(records) // n_psi


def compare_spectra(
    rec_a: Sequence[SpectrumRecord],
    rec_b: Sequence[SpectrumRecord],
    tol: float = DEFAULT_COMPARE_TOL,
) -> DisagreementReport:
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if len(rec_a) != len(rec_b):
        raise GridMismatchError(f"Spectra have {len(rec_a)} and {len(rec_b)} records")
    grid = infer_grid(rec_a)

    compared = 0
    n_disagree = 0
    max_delta = 0.0
    witness: Optional[Witness] = None
    mismatches: list[StatusMismatch] = []
    for a, b in zip(rec_a, rec_b):
        if a.psi != b.psi or a.phi != b.phi:
            raise GridMismatchError(f"Node ({a.psi}, {a.phi}) does not match ({b.psi}, {b.phi})")
        if a.status is not b.status:
            mismatches.append(StatusMismatch(a.psi, a.phi, a.status, b.status))
            continue
        if a.status is not TravelStatus.FINITE:
            continue
        compared += 1
        delta = abs(a.t - b.t)
        if delta > tol:
            n_disagree += 1
        if delta > max_delta:
            max_delta = delta
            if delta > tol:
                witness = Witness(a.psi, a.phi, a.t, b.t)

    fraction = n_disagree / compared if compared else 0.0
    if mismatches:
        logger.warning(f"{len(mismatches)} nodes differ in status between the two spectra")
    return DisagreementReport(
        grid=grid,
        compared=compared,
        n_disagree=n_disagree,
        disagree_fraction=fraction,
        max_abs_delta=max_delta,
        witness=witness,
        status_mismatches=tuple(mismatches),
    )


def distinguish(
    scene_a: Scene,
    scene_b: Scene,
    n_psi: int,
    n_phi: int,
    max_reflections: int = DEFAULT_MAX_REFLECTIONS,
    max_time: float = DEFAULT_MAX_TIME,
    tol: float = DEFAULT_COMPARE_TOL,
    *,
    eps_tan: float = DEFAULT_EPS_TAN,
    show_progress: bool = False,
) -> Verdict:
    if scene_a.ball_radius != scene_b.ball_radius:
        raise GridMismatchError(
            f"Scenes use different balls ({scene_a.ball_radius} vs {scene_b.ball_radius}); spectra are not comparable"
        )
    kwargs = dict(eps_tan=eps_tan, show_progress=show_progress)
    rec_a = travelling_time_spectrum(scene_a, n_psi, n_phi, max_reflections, max_time, **kwargs)
    rec_b = travelling_time_spectrum(scene_b, n_psi, n_phi, max_reflections, max_time, **kwargs)
    report = compare_spectra(rec_a, rec_b, tol)
    logger.info(
        f"Compared {report.compared} nodes at {n_psi}x{n_phi}: disagree fraction {report.disagree_fraction:.6g}, "
        f"max |delta t| {report.max_abs_delta:.6g}, status mismatches {len(report.status_mismatches)}"
    )
    if report.is_different:
        return Different(report)
    return IndistinguishableAtGrid(report)
