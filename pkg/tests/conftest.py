import copy
import json

import pytest

from hybrid_flight.settings import SETTINGS_ENV_VAR, app_settings
from hybrid_flight.transport import SimTransport

from .factories import HOVER_CONFIG, MISSION_CONFIG


@pytest.fixture(autouse=True)
def default_settings(monkeypatch):
    """Run every test against the built-in settings."""
    monkeypatch.delenv(SETTINGS_ENV_VAR, raising=False)
    app_settings.reload()
    yield
    monkeypatch.delenv(SETTINGS_ENV_VAR, raising=False)
    app_settings.reload()


@pytest.fixture
def settings_file(tmp_path, monkeypatch):
    """Point the settings loader at a JSON file holding the given overrides."""

    def write(overrides):
        path = tmp_path / "settings.json"
        path.write_text(json.dumps(overrides), encoding="utf-8")
        monkeypatch.setenv(SETTINGS_ENV_VAR, str(path))
        app_settings.reload()
        return path

    return write


@pytest.fixture
def sim_pair():
    """A lossless, in-order simulated endpoint pair."""
    a, b = SimTransport.pair(seed=1)
    yield a, b
    a.close()
    b.close()


@pytest.fixture
def hover_config():
    """A 60 s hover mission document."""
    return copy.deepcopy(HOVER_CONFIG)


@pytest.fixture
def mission_config():
    """A 30 s fifteen-command mission flown by the simulated autopilot."""
    return copy.deepcopy(MISSION_CONFIG)
