from __future__ import annotations

import math
from typing import Optional


TOOL_NAME = "planar-scattering"
TOOL_VERSION = "0.1.0"

BAR = "═" * 56
SEP = "─" * 56


# Analytic Santaló values are 2π(πa² − Σ|K_i|); trapping has measure zero for every entry.
SCENE_REGISTRY = {
    "empty": {
        "file": "empty.scn",
        "label": "Empty ball (a = 3)",
        "role_label": "analytic baseline",
        "priority_rank": 1,
        "expected_integral": 18.0 * math.pi**2,
        "note": "No obstacles; every travelling time is the chord 2a·cos(phi).",
    },
    "one_disc": {
        "file": "one_disc.scn",
        "label": "Unit disc at the origin (a = 3)",
        "role_label": "single convex obstacle",
        "priority_rank": 2,
        "expected_integral": 16.0 * math.pi**2,
        "note": "Non-trapping; every ray reflects at most once.",
    },
    "one_disc_shifted": {
        "file": "one_disc_shifted.scn",
        "label": "Unit disc at (1, 0) (a = 3)",
        "role_label": "translation check",
        "priority_rank": 3,
        "expected_integral": 16.0 * math.pi**2,
        "note": "Same areas as one_disc, so the same Liouville integral.",
    },
    "two_disc": {
        "file": "two_disc.scn",
        "label": "Unit discs at (±2, 0) (a = 5)",
        "role_label": "trapping corridor",
        "priority_rank": 4,
        "expected_integral": 46.0 * math.pi**2,
        "note": "Period-2 orbit along the x-axis; trapped set has measure zero.",
    },
    "two_disc_tight": {
        "file": "two_disc_tight.scn",
        "label": "Unit discs at (±1.1, 0) (a = 4)",
        "role_label": "slow escape",
        "priority_rank": 5,
        "expected_integral": 28.0 * math.pi**2,
        "note": "Gap 0.2; long bouncing sequences are common enough to measure decay past ten reflections.",
    },
    "three_disc": {
        "file": "three_disc.scn",
        "label": "Three unit discs on a circle of radius 2.5 (a = 6)",
        "role_label": "symbolic dynamics",
        "priority_rank": 6,
        "expected_integral": 2.0 * math.pi * (36.0 * math.pi - 3.0 * math.pi),
        "note": "Classic three-disc scatterer; a Cantor-like trapped set.",
    },
    "ellipse_pair": {
        "file": "ellipse_pair.scn",
        "label": "Two rotated ellipses (a = 4)",
        "role_label": "non-circular obstacles",
        "priority_rank": 7,
        "expected_integral": 2.0 * math.pi * (16.0 * math.pi - 1.5 * math.pi - 0.6 * math.pi),
        "note": "Axes (1.5, 1) and (1, 0.6); curvature varies along each boundary.",
    },
}


def ordered_scene_keys(keys: Optional[list[str]] = None) -> list[str]:
    key_list = list(keys or SCENE_REGISTRY.keys())
    return sorted(
        key_list,
        key=lambda key: (
            SCENE_REGISTRY[key].get("priority_rank", 999),
            SCENE_REGISTRY[key].get("label", key),
        ),
    )


def get_scene_entry(scene_key: str = "one_disc") -> dict:
    if scene_key not in SCENE_REGISTRY:
        raise ValueError(f"Unknown scene '{scene_key}'. Choose from: {list(SCENE_REGISTRY.keys())}")
    return SCENE_REGISTRY[scene_key]


def scene_role_summary(scene_key: str) -> str:
    info = get_scene_entry(scene_key)
    return f"{info['role_label']}: {info['note']}"
