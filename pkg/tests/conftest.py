"""
Shared pytest configuration.

IMPORTANT: env vars must be set before *any* artictwin module is imported
because `artictwin/config.py` calls `Settings()` at module level
(pydantic-settings reads env once at instantiation time). conftest.py is
always loaded first, so this file is the correct place to inject test values.
"""
import os

_TEST_ENV = {
    "ARTICTWIN_LOG_LEVEL": "WARNING",
    "ARTICTWIN_THREADS": "1",
}

for _key, _val in _TEST_ENV.items():
    os.environ.setdefault(_key, _val)

import pytest  # noqa: E402

from artictwin.config import Settings  # noqa: E402
from artictwin.services.synth import cabinet_door_scene, drawer_scene, generate_scene  # noqa: E402

# Short videos keep the end-to-end tests fast; every pair still has hundreds of matches.
SHORT_VIDEO = 6


@pytest.fixture
def cfg() -> Settings:
    """Paper defaults with a shorter optimisation and cheaper geometry metrics."""
    return Settings(ADAM_ITERATIONS=40, GEOMETRY_SAMPLES=2000, THREADS=1)


@pytest.fixture(scope="session")
def door_spec():
    return cabinet_door_scene(seed=3, final_angle=0.5, frame_count=SHORT_VIDEO)


@pytest.fixture(scope="session")
def drawer_spec():
    return drawer_scene(seed=4, final_distance=0.15, frame_count=SHORT_VIDEO)


@pytest.fixture(scope="session")
def door(door_spec):
    """(Dataset, GroundTruth) of a noiseless revolute scene."""
    return generate_scene(door_spec)


@pytest.fixture(scope="session")
def drawer(drawer_spec):
    """(Dataset, GroundTruth) of a noiseless prismatic scene."""
    return generate_scene(drawer_spec)
