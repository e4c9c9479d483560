"""
Tests for settings, logging setup and the exception handler.
"""

import logging

import pytest
from pydantic import ValidationError

from txsc.core.config import Settings
from txsc.core.exceptions import (
    EXIT_INTERNAL,
    EXIT_NOT_SERIALIZABLE,
    ConfigError,
    DuplicateName,
    NotSdtf,
    handle_exception,
)
from txsc.core.logging import get_logger, setup_logging


def test_defaults():
    """Settings defaults without a .env file."""
    settings = Settings(_env_file=None)
    assert settings.default_funds == 10_000
    assert settings.default_gas == 100
    assert settings.permutation_bound == 8
    assert settings.contracts_dir == settings.corpus_dir / "contracts"


def test_environment_overrides(monkeypatch):
    """TXSC_ variables override the defaults."""
    monkeypatch.setenv("TXSC_PERMUTATION_BOUND", "5")
    monkeypatch.setenv("TXSC_LOG_LEVEL", "debug")
    settings = Settings(_env_file=None)
    assert settings.permutation_bound == 5
    assert settings.log_level == "DEBUG"


@pytest.mark.parametrize(
    "overrides",
    [{"log_level": "CHATTY"}, {"permutation_bound": 0}, {"default_gas": -1}],
)
def test_invalid_settings(overrides):
    """Out-of-range settings fail validation."""
    with pytest.raises(ValidationError):
        Settings(_env_file=None, **overrides)


def test_loggers_are_namespaced():
    """Loggers live under the txsc namespace."""
    assert get_logger("txsc.services.parser").name == "txsc.services.parser"
    assert get_logger("main").name == "txsc.main"


def test_setup_logging_level():
    """setup_logging applies the requested level."""
    setup_logging("debug")
    assert logging.getLogger("txsc").level == logging.DEBUG
    setup_logging("warning")
    assert logging.getLogger("txsc").level == logging.WARNING
    with pytest.raises(AttributeError):
        setup_logging("chatty")


def test_exit_codes():
    """Exceptions map to their exit codes."""
    assert handle_exception(ConfigError("bad")) == 2
    assert handle_exception(DuplicateName("x", "attribute")) == 2
    assert handle_exception(NotSdtf("enter", "CDTF")) == EXIT_INTERNAL
    assert handle_exception(RuntimeError("boom")) == EXIT_INTERNAL
    assert EXIT_NOT_SERIALIZABLE == 3
