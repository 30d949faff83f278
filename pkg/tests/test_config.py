import json
import logging

import pytest
import structlog
from pydantic import ValidationError

from gptent.config import Settings, get_settings, load_settings, reset_settings
from gptent.logging_config import setup_logging


def test_defaults(fresh_settings):
    assert fresh_settings.tolerance == 1e-9
    assert fresh_settings.entropy_decimals == 12
    assert fresh_settings.log_level == "WARNING"


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("GPTENT_TOLERANCE", "1e-6")
    monkeypatch.setenv("GPTENT_LOG_LEVEL", "debug")
    monkeypatch.setenv("GPTENT_SEED", "7")
    reset_settings()
    settings = get_settings()
    assert settings.tolerance == 1e-6
    assert settings.log_level == "DEBUG"
    assert settings.seed == 7


def test_settings_are_cached(monkeypatch):
    first = load_settings()
    monkeypatch.setenv("GPTENT_SEED", "11")
    assert get_settings() is first
    reset_settings()
    assert get_settings().seed == 11


@pytest.mark.parametrize("name, value", [("GPTENT_LOG_LEVEL", "chatty"), ("GPTENT_TOLERANCE", "0.5")])
def test_invalid_values_are_rejected(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValidationError) as info:
        Settings()
    assert name in str(info.value)


def test_json_logs_go_to_stderr(capsys):
    setup_logging("INFO", json_logs=True, color=False)
    structlog.get_logger("gptent.test").info("scan_done", points=3)
    captured = capsys.readouterr()
    assert captured.out == ""
    event = json.loads(captured.err.strip().splitlines()[-1])
    assert event["event"] == "scan_done"
    assert event["points"] == 3
    assert event["level"] == "info"


def test_log_level_filters_events(capsys):
    setup_logging("ERROR", json_logs=True, color=False)
    structlog.get_logger("gptent.test").info("hidden")
    assert "hidden" not in capsys.readouterr().err
    assert logging.getLogger().level == logging.ERROR
