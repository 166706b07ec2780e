import importlib.resources

import pytest

from gameforge import gdl

_ASSET = importlib.resources.files("gameforge") / "assets/before_venturing_forth.json"


@pytest.fixture(scope="session")
def bundled_text() -> str:
    return _ASSET.read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def bundled_game(bundled_text) -> gdl.GameDefinition:
    return gdl.parse_game(bundled_text)
