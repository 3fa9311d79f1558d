"""Scene-file grammar and deterministic CSV / JSON emission.

Scene files are line oriented: blank lines and ``#`` comments are ignored,
exactly one ``ball <radius>`` line is required, and every
``ellipse <cx> <cy> <semi_major> <semi_minor> <rotation>`` line adds an
obstacle (1-based indices in file order). Parsed scenes are validated.

CSV files start with a ``#`` comment block (tool version, command line, seed,
sign conventions) followed by a pandas-written body whose floats use the
shortest round-trip representation, so identical runs are byte-identical.
"""

from __future__ import annotations

import json
import math
import re
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, TextIO

import pandas as pd
from loguru import logger

from _geometry import Ellipse, Scene, Vec2, validate_scene
from _shared_utils import TOOL_NAME, TOOL_VERSION


DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
SIGN_CONVENTION = (
    "q = a(cos psi, sin psi); v = -(cos(psi + phi), sin(psi + phi)); "
    "phi > 0 rotates the inward normal counterclockwise; obstacle indices start at 1"
)


class SceneSyntaxError(ValueError):
    def __init__(self, line_no: int, detail: str) -> None:
        super().__init__(f"line {line_no}: {detail}" if line_no > 0 else detail)
        self.line_no = line_no


@dataclass(frozen=True)
class SceneFile:
    path: Path
    scene: Scene


def _decimal(token: str, line_no: int) -> float:
    if not DECIMAL.fullmatch(token):
        raise SceneSyntaxError(line_no, f"'{token}' is not a decimal literal")
    return float(token)


def parse_scene(text: str) -> Scene:
    ball: float | None = None
    obstacles: list[Ellipse] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *fields = line.split()
        if keyword == "ball":
            if ball is not None:
                raise SceneSyntaxError(line_no, "duplicate 'ball' line")
            if len(fields) != 1:
                raise SceneSyntaxError(line_no, f"'ball' takes 1 value, got {len(fields)}")
            ball = _decimal(fields[0], line_no)
        elif keyword == "ellipse":
            if len(fields) != 5:
                raise SceneSyntaxError(line_no, f"'ellipse' takes 5 values, got {len(fields)}")
            cx, cy, major, minor, rotation = (_decimal(f, line_no) for f in fields)
            obstacles.append(Ellipse(Vec2(cx, cy), major, minor, rotation))
        else:
            raise SceneSyntaxError(line_no, f"unknown keyword '{keyword}'")
    if ball is None:
        raise SceneSyntaxError(0, "missing 'ball <radius>' line")

    scene = Scene(ball, tuple(obstacles))
    validate_scene(scene)
    return scene


def format_float(value: float) -> str:
    """Shortest decimal that parses back to exactly ``value``."""
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def serialize_scene(scene: Scene) -> str:
    lines = [f"ball {format_float(scene.ball_radius)}"]
    for e in scene.obstacles:
        values = (e.center.x, e.center.y, e.semi_major, e.semi_minor, e.rotation)
        lines.append("ellipse " + " ".join(format_float(v) for v in values))
    return "\n".join(lines) + "\n"


def load_scene(path: Path | str) -> SceneFile:
    path = Path(path)
    scene = parse_scene(path.read_text(encoding="utf-8"))
    logger.debug(f"Loaded {path.name}: ball {scene.ball_radius}, {scene.n_obstacles} obstacles")
    return SceneFile(path, scene)


def csv_header(command_line: Sequence[str], seed: int | None) -> list[str]:
    return [
        f"tool: {TOOL_NAME} {TOOL_VERSION}",
        f"command: {' '.join(command_line)}",
        f"seed: {seed if seed is not None else 'none'}",
        f"conventions: {SIGN_CONVENTION}",
    ]


def _formatted(df: pd.DataFrame) -> pd.DataFrame:
    out = df.copy()
    for col in out.columns:
        if pd.api.types.is_float_dtype(out[col]):
            out[col] = out[col].map(format_float)
    return out


def write_csv(df: pd.DataFrame, header: Sequence[str], out: Path | None = None) -> Path | None:
    """Write ``df`` after the ``#`` header block; to stdout when ``out`` is None."""
    body = _formatted(df).to_csv(index=False, lineterminator="\n")
    text = "".join(f"# {line}\n" for line in header) + body
    if out is None:
        _write_stream(sys.stdout, text)
        return None
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8", newline="\n")
    logger.info(f"Saved {len(df)} rows to {out}")
    return out


def _write_stream(stream: TextIO, text: str) -> None:
    stream.write(text)
    stream.flush()


def read_csv(path: Path | str) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def write_run_metadata(
    stem: str,
    flags: dict[str, object],
    *,
    out_dir: Path,
    extra: dict[str, object] | None = None,
) -> Path:
    """JSON sidecar with the git commit and flags; no timestamp so reruns stay byte-identical."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"run_metadata_{stem}.json"
    try:
        git_hash = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
        ).stdout.strip()
    except Exception:
        git_hash = "unknown"
    meta = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "git_commit": git_hash or "unknown",
        "flags": flags,
    }
    if extra:
        meta.update(extra)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
