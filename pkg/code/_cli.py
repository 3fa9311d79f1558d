"""Command dispatch for the scattering toolkit.

One subcommand per capability (trace, spectrum, sls, santalo, trapped,
compare, front, involute). Every command writes one CSV (stdout unless
``--out`` is given) and, with ``--out``, a ``run_metadata_<stem>.json``
sidecar next to it.

Exit codes: 0 success or indistinguishable, 2 input error, 3 "Different"
verdict, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
from loguru import logger

from _billiard import (
    DEFAULT_MAX_REFLECTIONS,
    DEFAULT_MAX_TIME,
    Exited,
    PhasePoint,
    log_trajectory_summary,
    trace,
)
from _compare import DEFAULT_COMPARE_TOL, Different, distinguish
from _fronts import FrontState, check_normal_tangency, involute, propagate_front
from _geometry import DEFAULT_EPS_TAN, Direction, Vec2
from _santalo import escape_rate, santalo_defect, trapped_fraction
from _scene_io import csv_header, load_scene, write_csv, write_run_metadata
from _shared_utils import BAR, SEP, TOOL_NAME, TOOL_VERSION
from _spectra import sls_sample, travelling_time_spectrum


EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIFFERENT = 3
EXIT_INTERNAL = 4

COMMANDS = ("trace", "spectrum", "sls", "santalo", "trapped", "compare", "front", "involute")
DEFAULT_GRID = 200
DEFAULT_SLS_GRID = 64
DEFAULT_CUTOFFS = (10, 100, 1000, 10_000)
DEFAULT_TRAPPED_SAMPLES = 10_000
DEFAULT_INVOLUTE_SAMPLES = 64


@dataclass(frozen=True)
class RunConfig:
    command: str
    scene: Optional[Path] = None
    scene_a: Optional[Path] = None
    scene_b: Optional[Path] = None
    n_psi: int = DEFAULT_GRID
    n_phi: int = DEFAULT_GRID
    n_omega: int = DEFAULT_SLS_GRID
    n_b: int = DEFAULT_SLS_GRID
    max_reflections: int = DEFAULT_MAX_REFLECTIONS
    max_time: float = DEFAULT_MAX_TIME
    tol: float = DEFAULT_COMPARE_TOL
    eps_tan: float = DEFAULT_EPS_TAN
    seed: int = 0
    out: Optional[Path] = None
    q: Optional[tuple[float, float]] = None
    v: Optional[tuple[float, float]] = None
    s0: float = 0.0
    eps0: float = 0.5
    delta: float = 0.1
    kappa0: float = 0.0
    obstacle_index: int = 1
    orientation: int = 1
    n_samples: Optional[int] = None
    cutoffs: tuple[int, ...] = DEFAULT_CUTOFFS
    show_progress: bool = True
    argv: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown command '{self.command}'. Choose from: {list(COMMANDS)}")
        for name in ("n_psi", "n_phi", "n_omega", "n_b", "max_reflections"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)}")
        for name in ("max_time", "tol", "eps_tan"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.n_samples is not None and self.n_samples < 1:
            raise ValueError(f"n_samples must be at least 1, got {self.n_samples}")
        if self.kappa0 < 0.0:
            raise ValueError(f"kappa0 must be >= 0, got {self.kappa0}")
        if self.orientation not in (1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {self.orientation}")
        if self.command == "compare":
            if self.scene_a is None or self.scene_b is None:
                raise ValueError("compare needs --scene-a and --scene-b")
        elif self.scene is None:
            raise ValueError(f"{self.command} needs --scene")
        if self.command in ("trace", "front") and (self.q is None or self.v is None):
            raise ValueError(f"{self.command} needs --q X,Y and --v VX,VY")

    def flags(self) -> dict[str, object]:
        out = {k: (str(v) if isinstance(v, Path) else v) for k, v in asdict(self).items() if k != "argv"}
        out["cutoffs"] = list(self.cutoffs)
        return out


def _start(config: RunConfig) -> PhasePoint:
    return PhasePoint(Vec2(*config.q), Direction.from_components(*config.v))


def _trace_frame(config: RunConfig) -> pd.DataFrame:
    scene = load_scene(config.scene).scene
    tr = trace(scene, _start(config), config.max_reflections, config.max_time, eps_tan=config.eps_tan)
    log_trajectory_summary(tr)
    rows = [
        {
            "event": "tangency" if ev.tangential else "reflection",
            "time": ev.time,
            "obstacle": ev.obstacle_index,
            "x": ev.point.x,
            "y": ev.point.y,
            "cos_incidence": ev.cos_incidence,
        }
        for ev in tr.events
    ]
    final = "exit" if isinstance(tr.status, Exited) else type(tr.status).__name__.lower()
    rows.append(
        {
            "event": final,
            "time": tr.interior_time,
            "obstacle": 0,
            "x": tr.end.q.x,
            "y": tr.end.q.y,
            "cos_incidence": math.nan,
        }
    )
    return pd.DataFrame(rows, columns=["event", "time", "obstacle", "x", "y", "cos_incidence"])


def _spectrum_frame(config: RunConfig) -> pd.DataFrame:
    scene = load_scene(config.scene).scene
    records = travelling_time_spectrum(
        scene,
        config.n_psi,
        config.n_phi,
        config.max_reflections,
        config.max_time,
        eps_tan=config.eps_tan,
        show_progress=config.show_progress,
    )
    return pd.DataFrame(
        {
            "psi": [r.psi for r in records],
            "phi": [r.phi for r in records],
            "status": [r.status.value for r in records],
            "t": [r.t for r in records],
            "reflections": [r.reflections for r in records],
            "tangencies": [r.tangencies for r in records],
        }
    )


def _sls_frame(config: RunConfig) -> pd.DataFrame:
    scene = load_scene(config.scene).scene
    records = sls_sample(
        scene,
        config.n_omega,
        config.n_b,
        config.max_reflections,
        config.max_time,
        eps_tan=config.eps_tan,
        show_progress=config.show_progress,
    )
    return pd.DataFrame(
        {
            "omega": [r.omega_angle for r in records],
            "b": [r.b for r in records],
            "theta": [r.theta.angle for r in records],
            "sojourn": [r.sojourn for r in records],
            "reflections": [r.reflections for r in records],
            "tangential": [r.tangential for r in records],
            "exited": [r.exited for r in records],
        }
    )


def _santalo_frame(config: RunConfig) -> pd.DataFrame:
    scene = load_scene(config.scene).scene
    report = santalo_defect(
        scene,
        config.n_psi,
        config.n_phi,
        config.max_reflections,
        config.max_time,
        eps_tan=config.eps_tan,
        show_progress=config.show_progress,
    )
    print(BAR, file=sys.stderr)
    print(f"Santaló identity on {config.scene} ({config.n_psi}x{config.n_phi})", file=sys.stderr)
    print(SEP, file=sys.stderr)
    print(f"  integral        {report.integral:.10f}", file=sys.stderr)
    print(f"  phase_volume    {report.phase_volume:.10f}", file=sys.stderr)
    print(f"  defect          {report.defect:.3e}  (relative {report.relative_defect:.3e})", file=sys.stderr)
    print(f"  excluded_weight {report.excluded_weight:.3e}  ({report.n_cutoff} capped nodes)", file=sys.stderr)
    return pd.DataFrame(
        [
            {
                "n_psi": config.n_psi,
                "n_phi": config.n_phi,
                "integral": report.integral,
                "phase_volume": report.phase_volume,
                "defect": report.defect,
                "relative_defect": report.relative_defect,
                "excluded_weight": report.excluded_weight,
                "n_cutoff": report.n_cutoff,
            }
        ]
    )


def _trapped_frame(config: RunConfig) -> pd.DataFrame:
    scene = load_scene(config.scene).scene
    n_samples = config.n_samples or DEFAULT_TRAPPED_SAMPLES
    fractions = trapped_fraction(
        scene,
        n_samples,
        config.seed,
        config.cutoffs,
        config.max_time,
        eps_tan=config.eps_tan,
        show_progress=config.show_progress,
    )
    try:
        fit = escape_rate(fractions)
        logger.info(f"Escape rate {fit.gamma:.6g} per reflection (r = {fit.r_value:.4f}, {fit.n_points} points)")
    except ValueError as exc:
        logger.info(f"No escape-rate fit: {exc}")
    return pd.DataFrame(
        {
            "cutoff": [c for c, _ in fractions],
            "fraction": [f for _, f in fractions],
            "n_samples": n_samples,
        }
    )


def _compare_frame(config: RunConfig) -> tuple[pd.DataFrame, bool]:
    scene_a = load_scene(config.scene_a).scene
    scene_b = load_scene(config.scene_b).scene
    verdict = distinguish(
        scene_a,
        scene_b,
        config.n_psi,
        config.n_phi,
        config.max_reflections,
        config.max_time,
        config.tol,
        eps_tan=config.eps_tan,
        show_progress=config.show_progress,
    )
    report = verdict.report
    different = isinstance(verdict, Different)
    w = report.witness
    if different:
        print(f"different: {report.n_disagree} of {report.compared} nodes disagree", file=sys.stderr)
    else:
        print(f"indistinguishable at grid {config.n_psi}x{config.n_phi}", file=sys.stderr)
    frame = pd.DataFrame(
        [
            {
                "verdict": "different" if different else "indistinguishable",
                "n_psi": report.grid[0],
                "n_phi": report.grid[1],
                "compared": report.compared,
                "n_disagree": report.n_disagree,
                "disagree_fraction": report.disagree_fraction,
                "max_abs_delta": report.max_abs_delta,
                "status_mismatches": len(report.status_mismatches),
                "witness_psi": w.psi if w else math.nan,
                "witness_phi": w.phi if w else math.nan,
                "witness_t_a": w.t_a if w else math.nan,
                "witness_t_b": w.t_b if w else math.nan,
            }
        ]
    )
    return frame, different


def _front_frame(config: RunConfig) -> pd.DataFrame:
    scene = load_scene(config.scene).scene
    x = _start(config)
    states = [FrontState(x.q, x.v, config.kappa0, 0.0)]
    states += propagate_front(
        scene, states[0], config.max_reflections, config.max_time, eps_tan=config.eps_tan
    )
    return pd.DataFrame(
        {
            "time": [s.time for s in states],
            "x": [s.point.x for s in states],
            "y": [s.point.y for s in states],
            "dx": [s.dir.vx for s in states],
            "dy": [s.dir.vy for s in states],
            "kappa": [s.kappa for s in states],
        }
    )


def _involute_frame(config: RunConfig) -> pd.DataFrame:
    scene = load_scene(config.scene).scene
    e = scene.obstacle(config.obstacle_index)
    curve = involute(
        e,
        config.s0,
        config.eps0,
        config.delta,
        config.orientation,
        config.n_samples or DEFAULT_INVOLUTE_SAMPLES,
    )
    logger.info(f"Involute normal-tangency deviation {check_normal_tangency(curve, e):.3e}")
    return pd.DataFrame(
        {
            "s": curve.params,
            "x": curve.points[:, 0],
            "y": curve.points[:, 1],
            "nx": curve.normals[:, 0],
            "ny": curve.normals[:, 1],
            "curvature": curve.curvatures,
        }
    )


def _dispatch(config: RunConfig) -> tuple[pd.DataFrame, int]:
    if config.command == "compare":
        frame, different = _compare_frame(config)
        return frame, EXIT_DIFFERENT if different else EXIT_OK
    builders = {
        "trace": _trace_frame,
        "spectrum": _spectrum_frame,
        "sls": _sls_frame,
        "santalo": _santalo_frame,
        "trapped": _trapped_frame,
        "front": _front_frame,
        "involute": _involute_frame,
    }
    return builders[config.command](config), EXIT_OK


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit code."""
    try:
        frame, code = _dispatch(config)
        seed = config.seed if config.command == "trapped" else None
        write_csv(frame, csv_header(config.argv or (config.command,), seed), config.out)
        if config.out is not None:
            path = write_run_metadata(
                config.out.stem,
                config.flags(),
                out_dir=config.out.parent,
                extra={"command_line": list(config.argv), "exit_code": code},
            )
            logger.info(f"Saved metadata to {path}")
        return code
    except (ValueError, FileNotFoundError, IndexError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT
    except RuntimeError as exc:
        logger.error(f"Internal invariant violated: {exc}")
        return EXIT_INTERNAL


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected X,Y, got '{text}'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected two numbers, got '{text}'") from exc


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Travelling times, sojourn times and convex fronts for planar exterior billiards.",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    parser.add_argument("command", choices=COMMANDS, help="Capability to run.")
    parser.add_argument("--scene", type=Path, help="Scene file for single-scene commands.")
    parser.add_argument("--scene-a", type=Path, help="First scene for compare.")
    parser.add_argument("--scene-b", type=Path, help="Second scene for compare.")
    parser.add_argument("--n-psi", type=int, default=DEFAULT_GRID, help="Boundary-angle grid size.")
    parser.add_argument("--n-phi", type=int, default=DEFAULT_GRID, help="Incidence-angle grid size.")
    parser.add_argument("--n-omega", type=int, default=DEFAULT_SLS_GRID, help="Incoming-direction grid size (sls).")
    parser.add_argument("--n-b", type=int, default=DEFAULT_SLS_GRID, help="Impact-parameter grid size (sls).")
    parser.add_argument("--max-reflections", type=int, default=DEFAULT_MAX_REFLECTIONS, help="Reflection cap.")
    parser.add_argument("--max-time", type=float, default=DEFAULT_MAX_TIME, help="Time cap.")
    parser.add_argument("--tol", type=float, default=DEFAULT_COMPARE_TOL, help="Travelling-time tolerance (compare).")
    parser.add_argument("--eps-tan", type=float, default=DEFAULT_EPS_TAN, help="Relative tangency threshold.")
    parser.add_argument("--seed", type=int, default=0, help="Seed for Monte-Carlo sampling (trapped).")
    parser.add_argument("--out", type=Path, default=None, help="Output CSV path (default: stdout).")
    parser.add_argument("--q", type=_pair, default=None, help="Start position X,Y (trace, front).")
    parser.add_argument("--v", type=_pair, default=None, help="Start direction VX,VY, unit length (trace, front).")
    parser.add_argument("--s0", type=float, default=0.0, help="Arc-length base point of the involute.")
    parser.add_argument("--eps0", type=float, default=0.5, help="Involute string length at s0.")
    parser.add_argument("--delta", type=float, default=0.1, help="Shortest string length kept in the involute window.")
    parser.add_argument("--kappa0", type=float, default=0.0, help="Initial front curvature (front).")
    parser.add_argument("--obstacle-index", type=int, default=1, help="1-based obstacle for the involute.")
    parser.add_argument("--orientation", type=int, choices=(1, -1), default=1, help="Boundary traversal sense.")
    parser.add_argument("--n-samples", type=int, default=None, help="Samples for trapped / involute.")
    parser.add_argument(
        "--cutoffs",
        type=_int_list,
        default=DEFAULT_CUTOFFS,
        help="Comma-separated increasing reflection cutoffs (trapped).",
    )
    parser.add_argument("--no-progress", action="store_true", help="Disable tqdm progress bars.")
    return parser


def config_from_args(args: argparse.Namespace, argv: Sequence[str]) -> RunConfig:
    return RunConfig(
        command=args.command,
        scene=args.scene,
        scene_a=args.scene_a,
        scene_b=args.scene_b,
        n_psi=args.n_psi,
        n_phi=args.n_phi,
        n_omega=args.n_omega,
        n_b=args.n_b,
        max_reflections=args.max_reflections,
        max_time=args.max_time,
        tol=args.tol,
        eps_tan=args.eps_tan,
        seed=args.seed,
        out=args.out,
        q=args.q,
        v=args.v,
        s0=args.s0,
        eps0=args.eps0,
        delta=args.delta,
        kappa0=args.kappa0,
        obstacle_index=args.obstacle_index,
        orientation=args.orientation,
        n_samples=args.n_samples,
        cutoffs=tuple(args.cutoffs),
        show_progress=not args.no_progress,
        argv=tuple(argv),
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args, argv)
    except ValueError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT
    return run(config)
