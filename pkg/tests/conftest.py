"""Shared fixtures for the gptent test suite."""

import pytest

from gptent.catalog import (
    example4_state,
    firefly_space,
    firefly_states,
    pr_box_state,
    squit_space,
    squit_states,
    unit_square,
)
from gptent.config import get_settings, reset_settings
from gptent.geometry import enumerate_vertices
from gptent.logging_config import setup_logging


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Default settings for every test, regardless of the caller's environment."""
    for name in ("GPTENT_LOG_LEVEL", "GPTENT_LOG_JSON", "GPTENT_TOLERANCE", "GPTENT_SEED"):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    settings = get_settings()
    setup_logging(settings.log_level, json_logs=False, color=False)
    yield settings
    reset_settings()


@pytest.fixture
def squit():
    return squit_space()


@pytest.fixture
def squit_named(squit):
    return squit_states(squit)


@pytest.fixture
def firefly():
    return firefly_space()


@pytest.fixture
def firefly_named(firefly):
    return firefly_states(firefly)


@pytest.fixture
def firefly_poly(firefly):
    return enumerate_vertices(firefly)


@pytest.fixture
def square():
    return unit_square()


@pytest.fixture
def pr_joint():
    return pr_box_state()


@pytest.fixture
def example4():
    return example4_state()
