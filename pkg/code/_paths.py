from __future__ import annotations

from pathlib import Path


CODE_DIR = Path(__file__).resolve().parent
ROOT_DIR = CODE_DIR.parent
SCENES_DIR = ROOT_DIR / "scenes"
RESULTS_DIR = ROOT_DIR / "results"
RESULTS_CORE_DIR = RESULTS_DIR / "core"
RESULTS_SECONDARY_DIR = RESULTS_DIR / "secondary"


def ensure_results_dirs() -> None:
    RESULTS_CORE_DIR.mkdir(parents=True, exist_ok=True)
    RESULTS_SECONDARY_DIR.mkdir(parents=True, exist_ok=True)
