from __future__ import annotations

import pytest

from _geometry import Scene, disc
from _paths import SCENES_DIR
from _scene_io import load_scene


@pytest.fixture(scope="session")
def scenes_dir():
    return SCENES_DIR


@pytest.fixture(scope="session")
def empty_scene() -> Scene:
    return Scene(3.0, ())


@pytest.fixture(scope="session")
def one_disc() -> Scene:
    return Scene(3.0, (disc(0.0, 0.0, 1.0),))


@pytest.fixture(scope="session")
def two_disc() -> Scene:
    return load_scene(SCENES_DIR / "two_disc.scn").scene
