import pytest

from levitodyn import config


@pytest.fixture(autouse=True)
def no_env_config(monkeypatch):
    """Runs never pick up a config path from the developer's .env."""
    monkeypatch.setattr(config, "LEVITODYN_CONFIG", "")
