"""Global fixtures for ris_vlc tests."""
# Fixtures that are defined in conftest.py are available across all tests. You can
# also define fixtures within a particular test file to scope them locally.
#
# See here for more info: https://docs.pytest.org/en/latest/fixture.html (note that
# pytest includes fixtures OOB, such as tmp_path and monkeypatch, which we use below)
import math

import numpy as np
import pytest
import yaml

from ris_vlc.const import ENV_OUTPUT_DIR
from ris_vlc.system_model import MirrorArray, Scene, SystemParams, UserState

from .const import SYMMETRIC_AZIMUTH_DEG, SYMMETRIC_DEVICE


# Results written by the CLI would land in the user's output directory when this
# variable is set in the shell running the tests, so every test starts without it.
@pytest.fixture(autouse=True)
def clear_output_dir(monkeypatch):
    """Run every test without an output directory override."""
    monkeypatch.delenv(ENV_OUTPUT_DIR, raising=False)
    yield


@pytest.fixture(name="params")
def params_fixture():
    """Default link parameters."""
    return SystemParams()


@pytest.fixture(name="scene")
def scene_fixture():
    """Default room: AP on the ceiling, one user, 10 x 30 mirror array at x = 0."""
    return Scene()


# The default scene with the user's body removed, so LoS availability only
# depends on explicit blockers and the device orientation.
@pytest.fixture(name="open_scene")
def open_scene_fixture():
    """Default scene without a body next to the device."""
    return Scene(users=(UserState(body_offset=None),))


# The device sits on the diagonal and looks back at the corner, so swapping x and y
# maps the room onto itself. A mirror array facing +x and a wall patch grid facing +y
# then see the same geometry.
@pytest.fixture(name="symmetric_scene")
def symmetric_scene_fixture():
    """Room that is symmetric under swapping the x and y axes."""
    user = UserState(
        device_pos=SYMMETRIC_DEVICE,
        azimuth=math.radians(SYMMETRIC_AZIMUTH_DEG),
        polar=math.radians(41.0),
        body_offset=None,
    )
    array = MirrorArray().with_orientation(roll=0.0, yaw=-math.pi / 2)
    return Scene(users=(user,), mirror_array=array)


@pytest.fixture(name="rng")
def rng_fixture():
    """Seeded generator so random tests are repeatable."""
    return np.random.default_rng(20240917)


# Writes a scenario mapping (or raw text) to a YAML file inside tmp_path and returns
# the path, so config and CLI tests can go through the real file loader.
@pytest.fixture(name="write_config")
def write_config_fixture(tmp_path):
    """Return a helper that saves a scenario file."""

    def _write(content, name="scenario.yaml"):
        path = tmp_path / name
        if isinstance(content, str):
            path.write_text(content, encoding="utf-8")
        else:
            path.write_text(yaml.safe_dump(content), encoding="utf-8")
        return path

    return _write
