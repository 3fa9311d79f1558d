'''
Acceptance bundle: the headline numerical checks at full size.

Runs each check with the sizes listed in REPRODUCIBILITY.md (400x400 Santaló grids,
10^5 Monte-Carlo samples, 50 random front configurations, ...) and records
value, threshold and pass/fail.

Outputs
-------
results/core/acceptance_runs.csv
    criterion, check, value, threshold, passed, seconds
results/core/acceptance_runs.md
    the same table with one line per criterion
results/core/run_metadata_acceptance_runs.json

Use --quick for a reduced-size pass (grids / 4, samples / 20) while iterating.
'''

from __future__ import annotations

import argparse
import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

CODE_ROOT = Path(__file__).resolve().parents[1]
if str(CODE_ROOT) not in sys.path:
    sys.path.insert(0, str(CODE_ROOT))

from _billiard import PhasePoint, classify_trapped, itinerary, trace
from _cli import main as cli_main
from _compare import Different, IndistinguishableAtGrid, distinguish
from _fronts import (
    FrontState,
    check_normal_tangency,
    finite_difference_curvature,
    front_at,
    involute,
    perpendicular_hits,
    propagate_front,
    sample_ellipse_arc,
    sampled_curvature,
)
from _geometry import Direction, Ellipse, Scene, Transversal, Vec2, disc, outward_normal, ray_ellipse_intersect
from _paths import RESULTS_CORE_DIR, SCENES_DIR, ensure_results_dirs
from _santalo import santalo_defect, trapped_fraction
from _scene_io import load_scene, write_run_metadata
from _shared_utils import BAR, SEP
from _spectra import boundary_phase_point, shoot_from_zline, travelling_time_spectrum


CSV_PATH = RESULTS_CORE_DIR / "acceptance_runs.csv"
MD_PATH = RESULTS_CORE_DIR / "acceptance_runs.md"


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser()
    parser.add_argument("--grid", type=int, default=400, help="Santaló grid size per axis.")
    parser.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo samples for trapped fractions.")
    parser.add_argument("--seed", type=int, default=20240611, help="Seed for every randomized check.")
    parser.add_argument("--quick", action="store_true", help="Reduced sizes for a fast pass.")
    parser.add_argument("--no-progress", action="store_true", help="Disable tqdm progress bars.")
    return parser.parse_args()


def _row(criterion: int, check: str, value: float, threshold: float, passed: bool, t0: float) -> dict[str, object]:
    return {
        "criterion": criterion,
        "check": check,
        "value": float(value),
        "threshold": float(threshold),
        "passed": bool(passed),
        "seconds": round(time.perf_counter() - t0, 2),
    }


def _scene(name: str) -> Scene:
    return load_scene(SCENES_DIR / name).scene


def check_santalo(grid: int, show_progress: bool) -> list[dict[str, object]]:
    rows = []
    t0 = time.perf_counter()
    empty = santalo_defect(_scene("empty.scn"), grid, grid, show_progress=show_progress)
    rows.append(_row(1, "empty scene |relative defect|", abs(empty.relative_defect), 1e-3,
                     abs(empty.relative_defect) < 1e-3, t0))

    t0 = time.perf_counter()
    centred = santalo_defect(_scene("one_disc.scn"), grid, grid, show_progress=show_progress)
    rows.append(_row(2, "one disc |relative defect|", abs(centred.relative_defect), 5e-3,
                     abs(centred.relative_defect) < 5e-3, t0))
    t0 = time.perf_counter()
    shifted = santalo_defect(_scene("one_disc_shifted.scn"), grid, grid, show_progress=show_progress)
    change = abs(shifted.integral - centred.integral) / centred.integral
    rows.append(_row(2, "disc translated to (1,0): relative change", change, 5e-3, change < 5e-3, t0))

    t0 = time.perf_counter()
    two = santalo_defect(_scene("two_disc.scn"), grid, grid, 1000, show_progress=show_progress)
    bound = two.error_bar + 5e-3 * two.phase_volume
    rows.append(_row(2, "two-disc |defect| within excluded weight bound", abs(two.defect), bound,
                     abs(two.defect) <= bound, t0))
    return rows


def check_sojourn(seed: int) -> list[dict[str, object]]:
    rng = np.random.default_rng(seed)
    a, r = 3.0, 1.0
    centre = Vec2(0.4, -0.3)
    scene = Scene(a, (disc(centre.x, centre.y, r),))
    wide = scene.with_ball_radius(2.0 * a)
    t0 = time.perf_counter()
    worst_formula = 0.0
    worst_radius = 0.0
    checked = 0
    while checked < 100:
        omega_angle = float(rng.uniform(0.0, 2.0 * math.pi))
        omega = Direction.from_angle(omega_angle)
        b = centre.dot(omega.perp()) + float(rng.uniform(-0.95 * r, 0.95 * r))
        tr, rec = shoot_from_zline(scene, omega_angle, b)
        if rec.reflections != 1 or rec.tangential:
            continue
        expected = centre.dot(omega.vec - rec.theta.vec) - r * (rec.theta.vec - omega.vec).norm()
        worst_formula = max(worst_formula, abs(rec.sojourn - expected))
        _, rec_wide = shoot_from_zline(wide, omega_angle, b)
        worst_radius = max(worst_radius, abs(rec.sojourn - rec_wide.sojourn))
        checked += 1
    rows = [
        _row(3, "one-reflection sojourn vs closed form (max abs error)", worst_formula, 1e-9, worst_formula < 1e-9, t0),
        _row(3, "sojourn at a vs 2a (max abs difference)", worst_radius, 1e-9, worst_radius < 1e-9, t0),
    ]
    t0 = time.perf_counter()
    _, back = shoot_from_zline(Scene(a, (disc(0.0, 0.0, r),)), 0.0, 0.0)
    error = abs(back.sojourn + 2.0 * r)
    rows.append(_row(3, "backscatter sojourn + 2r", error, 1e-9, error < 1e-9, t0))
    return rows


def check_trapped(samples: int, seed: int, show_progress: bool) -> list[dict[str, object]]:
    rows = []
    t0 = time.perf_counter()
    cutoffs = (10, 100, 1000, 10_000)
    tight = trapped_fraction(_scene("two_disc_tight.scn"), samples, seed, cutoffs, show_progress=show_progress)
    values = [f for _, f in tight]
    monotone = all(x >= y for x, y in zip(values, values[1:]))
    rows.append(_row(4, "tight two-disc fraction(10)", values[0], 0.0, values[0] > 0.0, t0))
    rows.append(_row(4, "tight two-disc fraction(10^4) < fraction(10), non-increasing",
                     values[-1], values[0], monotone and values[-1] < values[0], t0))

    t0 = time.perf_counter()
    wide = trapped_fraction(_scene("two_disc.scn"), samples, seed, (2, 3, 4, 6), show_progress=show_progress)
    values = [f for _, f in wide]
    monotone = all(x >= y for x, y in zip(values, values[1:]))
    rows.append(_row(4, "two-disc (a=5) fraction(6) < fraction(2), non-increasing",
                     values[-1], values[0], monotone and values[-1] < values[0], t0))

    t0 = time.perf_counter()
    single = trapped_fraction(_scene("one_disc.scn"), samples, seed, (2, 3), show_progress=show_progress)
    rows.append(_row(4, "single disc fraction at cutoff 2", single[0][1], 0.0, single[0][1] == 0.0, t0))
    return rows


def check_involute() -> list[dict[str, object]]:
    rows = []
    for label, e in (("unit circle", disc(0.0, 0.0, 1.0)), ("ellipse (2,1)", Ellipse(Vec2(0.0, 0.0), 2.0, 1.0))):
        t0 = time.perf_counter()
        curve = involute(e, 0.0, 0.5, 0.1, 1, 64)
        deviation = check_normal_tangency(curve, e)
        rows.append(_row(5, f"{label}: normal-line tangency deviation", deviation, 1e-6, deviation < 1e-6, t0))
        k = sampled_curvature(curve.points)
        rows.append(_row(5, f"{label}: min sampled curvature", float(k.min()), 0.0, bool(np.all(k > 0.0)), t0))

    t0 = time.perf_counter()
    curve = involute(disc(0.0, 0.0, 1.0), 0.0, 0.5, 0.25, 1, 1000)
    k = sampled_curvature(curve.points)[1:-1]
    error = float(np.max(np.abs(k - curve.curvatures[1:-1])))
    rows.append(_row(5, "circle involute curvature vs 1/(c-s)", error, 1e-4, error < 1e-4, t0))
    return rows


def random_one_reflection_configs(rng: np.random.Generator, n: int) -> list[tuple[Scene, FrontState, float]]:
    configs = []
    while len(configs) < n:
        semi_major = float(rng.uniform(0.6, 1.5))
        semi_minor = semi_major * float(rng.uniform(0.4, 1.0))
        centre = Vec2(float(rng.uniform(-0.3, 0.3)), float(rng.uniform(-0.3, 0.3)))
        e = Ellipse(centre, semi_major, semi_minor, float(rng.uniform(0.0, math.pi)))
        scene = Scene(3.0, (e,))
        d = Direction.from_angle(float(rng.uniform(0.0, 2.0 * math.pi)))
        q = centre - d.vec * 1.8 + d.perp().vec * float(rng.uniform(-1.5, 1.5))
        hit = ray_ellipse_intersect(q, d, e)
        if not isinstance(hit, Transversal) or -d.dot(outward_normal(e, hit.p_enter)) < 0.15:
            continue
        kappa0 = float(rng.choice([0.0, rng.uniform(0.05, 2.0)]))
        configs.append((scene, FrontState(q, d, kappa0), hit.t_enter + float(rng.uniform(0.2, 1.5))))
    return configs


def check_fronts(seed: int, n_random: int, n_multi: int) -> list[dict[str, object]]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for scene, start, T in random_one_reflection_configs(rng, n_random):
        law = front_at(scene, start, T).kappa
        fd = finite_difference_curvature(scene, PhasePoint(start.point, start.dir), 1e-5, T, start.kappa)
        worst = max(worst, abs(law - fd) / max(abs(law), 1e-12))
    rows = [_row(6, f"mirror law vs finite differences ({n_random} configs, max rel error)", worst, 1e-4,
                 worst < 1e-4, t0)]

    t0 = time.perf_counter()
    scene = _scene("two_disc.scn")
    min_kappa = math.inf
    for _ in range(n_multi):
        x = boundary_phase_point(scene.ball_radius, float(rng.uniform(0.0, 2.0 * math.pi)),
                                 float(rng.uniform(-1.4, 1.4)))
        try:
            states = propagate_front(scene, FrontState(x.q, x.v, float(rng.uniform(0.0, 1.0))), 200)
        except ValueError:
            continue
        min_kappa = min([min_kappa] + [s.kappa for s in states])
    rows.append(_row(6, f"min kappa over {n_multi} two-disc propagations", min_kappa, 0.0, min_kappa >= 0.0, t0))
    return rows


def opposing_disc_arcs(rng: np.random.Generator):
    r_y = float(rng.uniform(0.5, 2.0))
    r_x = float(rng.uniform(0.5, 2.0))
    gap = float(rng.uniform(0.5, 3.0))
    tilt = float(rng.uniform(-0.6, 0.6))
    spread = float(rng.uniform(0.3, 0.9))
    distance = r_y + r_x + gap
    cx, cy = distance * math.cos(tilt), distance * math.sin(tilt)
    y = sample_ellipse_arc(disc(0.0, 0.0, r_y), tilt - spread, tilt + spread, 81)
    x = sample_ellipse_arc(disc(cx, cy, r_x), math.pi + tilt - spread, math.pi + tilt + spread, 81)
    return y, x


def check_perpendicular(seed: int) -> list[dict[str, object]]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    counts = [len(perpendicular_hits(*opposing_disc_arcs(rng))) for _ in range(20)]
    rows = [_row(7, "opposing arcs with exactly one hit (of 20)", sum(c == 1 for c in counts), 20,
                 all(c == 1 for c in counts), t0)]
    t0 = time.perf_counter()
    inner = sample_ellipse_arc(disc(0.0, 0.0, 1.0), -0.7, 0.7, 41)
    outer = sample_ellipse_arc(disc(0.0, 0.0, 2.0), -0.7, 0.7, 41)
    hits = perpendicular_hits(inner, outer)
    rows.append(_row(7, "concentric arcs flagged degenerate", float(len(hits)), 0.0, hits.degenerate, t0))
    return rows


def check_distinguisher(grid: int, show_progress: bool) -> list[dict[str, object]]:
    one = _scene("one_disc.scn")
    rows = []
    t0 = time.perf_counter()
    same = distinguish(one, one, grid, grid, show_progress=show_progress)
    rows.append(_row(8, "identical scenes disagree fraction", same.report.disagree_fraction, 0.0,
                     isinstance(same, IndistinguishableAtGrid), t0))
    t0 = time.perf_counter()
    bigger = distinguish(one, _scene("one_disc_r105.scn"), grid, grid, show_progress=show_progress)
    rows.append(_row(8, "r=1 vs r=1.05 max |delta t|", bigger.report.max_abs_delta, 0.19,
                     isinstance(bigger, Different) and bigger.report.max_abs_delta >= 0.19, t0))
    t0 = time.perf_counter()
    moved = Scene(one.ball_radius, (disc(0.1, 0.0, 1.0),))
    shifted = distinguish(one, moved, grid, grid, show_progress=show_progress)
    rows.append(_row(8, "disc vs disc translated by (0.1,0) max |delta t|", shifted.report.max_abs_delta, 0.01,
                     isinstance(shifted, Different) and shifted.report.max_abs_delta > 0.01, t0))
    return rows


def check_billiard(seed: int) -> list[dict[str, object]]:
    rng = np.random.default_rng(seed)
    rows = []
    scene = _scene("three_disc.scn")
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        x = boundary_phase_point(scene.ball_radius, float(rng.uniform(0.0, 2.0 * math.pi)),
                                 float(rng.uniform(-1.5, 1.5)))
        forward = trace(scene, x)
        if not forward.exited or forward.n_tangencies or forward.n_reflections > 8:
            continue
        if any(ev.cos_incidence < 1e-3 for ev in forward.events):
            continue
        back = trace(scene, forward.end.reversed())
        worst = max(worst, (back.end.q - x.q).norm(), (back.end.v.vec + x.v.vec).norm())
    rows.append(_row(9, "time-reversal retrace error", worst, 1e-6, worst < 1e-6, t0))

    t0 = time.perf_counter()
    records = travelling_time_spectrum(_scene("one_disc.scn"), 100, 100)
    most = max(r.reflections for r in records)
    rows.append(_row(9, "single disc max reflections over 10^4 nodes", most, 1, most <= 1, t0))

    t0 = time.perf_counter()
    two = _scene("two_disc.scn")
    x = PhasePoint(Vec2(0.0, 0.0), Direction(1.0, 0.0))
    codes = itinerary(trace(two, x, 20))
    alternating = codes == tuple(2 if k % 2 == 0 else 1 for k in range(20))
    flags = classify_trapped(two, x, 20)
    rows.append(_row(9, "two-disc axis orbit alternates and is trapped both ways", len(codes), 20,
                     alternating and flags.forward_trapped_candidate and flags.backward_trapped_candidate, t0))
    return rows


def check_determinism() -> list[dict[str, object]]:
    t0 = time.perf_counter()
    scene = str(SCENES_DIR / "two_disc.scn")
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "spectrum.csv"
        outputs = []
        for _ in range(2):
            cli_main(["spectrum", "--scene", scene, "--n-psi", "40", "--n-phi", "40", "--out", str(out),
                      "--no-progress"])
            outputs.append(out.read_bytes())
        identical = outputs[0] == outputs[1]
    return [_row(10, "spectrum CSV byte-identical across runs", float(identical), 1.0, identical, t0)]


def write_markdown(df: pd.DataFrame) -> None:
    lines = [
        "# Acceptance runs",
        "",
        f"{int(df['passed'].sum())} of {len(df)} checks passed.",
        "",
        "| criterion | check | value | threshold | passed | seconds |",
        "| ---: | --- | ---: | ---: | :---: | ---: |",
    ]
    for _, row in df.iterrows():
        lines.append(
            f"| {int(row['criterion'])} | {row['check']} | {float(row['value']):.6g} | "
            f"{float(row['threshold']):.3g} | {'yes' if row['passed'] else 'NO'} | {float(row['seconds']):.1f} |"
        )
    MD_PATH.write_text("\n".join(lines) + "\n", encoding="utf-8")


def main() -> None:
    args = parse_args()
    ensure_results_dirs()
    grid = max(args.grid // 4, 20) if args.quick else args.grid
    samples = max(args.samples // 20, 1000) if args.quick else args.samples
    show_progress = not args.no_progress

    print(BAR)
    print(f"Acceptance runs: grid {grid}x{grid}, {samples} samples, seed {args.seed}")
    print(SEP)

    rows: list[dict[str, object]] = []
    rows += check_santalo(grid, show_progress)
    rows += check_sojourn(args.seed)
    rows += check_trapped(samples, args.seed, show_progress)
    rows += check_involute()
    rows += check_fronts(args.seed, 50, 100 if args.quick else 1000)
    rows += check_perpendicular(args.seed)
    rows += check_distinguisher(max(grid // 2, 20), show_progress)
    rows += check_billiard(args.seed)
    rows += check_determinism()

    df = pd.DataFrame(rows)
    for _, row in df.iterrows():
        status = "ok " if row["passed"] else "FAIL"
        logger.info(f"[{status}] {int(row['criterion']):>2} {row['check']}: {float(row['value']):.6g}")
    df.to_csv(CSV_PATH, index=False)
    logger.info(f"Wrote {CSV_PATH}")
    write_markdown(df)
    logger.info(f"Wrote {MD_PATH}")
    meta = write_run_metadata(
        "acceptance_runs",
        vars(args),
        out_dir=RESULTS_CORE_DIR,
        extra={"n_checks": int(len(df)), "n_passed": int(df["passed"].sum())},
    )
    logger.info(f"Wrote {meta}")
    if not df["passed"].all():
        raise SystemExit(1)


if __name__ == "__main__":
    main()
