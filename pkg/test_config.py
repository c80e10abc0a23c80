"""
Test environment variable configuration and logging setup.
"""
import importlib
import logging

import pytest

import config
from utils.logger import setup_logger


@pytest.fixture
def reload_config(monkeypatch):
    """Reload config under patched variables, and restore it afterwards."""
    yield lambda: importlib.reload(config)
    monkeypatch.undo()
    importlib.reload(config)


def test_defaults(monkeypatch, reload_config):
    for name in ("SELECTION_TOL", "SELECTION_TRIALS", "SELECTION_SEED", "SELECTION_BRACKET_LOW",
                 "SELECTION_BRACKET_HIGH", "SELECTION_LOG_LEVEL", "SELECTION_WORKERS"):
        monkeypatch.delenv(name, raising=False)
    cfg = reload_config()
    assert cfg.SERIES_TOL == 1e-12
    assert cfg.SERIES_K_MAX >= 10
    assert cfg.DEFAULT_TRIALS == 1000000
    assert cfg.DEFAULT_SEED == 42
    assert cfg.DEFAULT_BRACKET == (0.5, 2.0)
    assert cfg.MC_WORKERS == 1
    assert cfg.LOG_LEVEL == "INFO"


def test_environment_overrides(monkeypatch, reload_config):
    monkeypatch.setenv("SELECTION_TOL", "1e-10")
    monkeypatch.setenv("SELECTION_SEED", "7")
    monkeypatch.setenv("SELECTION_BRACKET_LOW", "0.8")
    monkeypatch.setenv("SELECTION_BRACKET_HIGH", "1.6")
    monkeypatch.setenv("SELECTION_LOG_LEVEL", "debug")
    cfg = reload_config()
    assert cfg.SERIES_TOL == 1e-10
    assert cfg.DEFAULT_SEED == 7
    assert cfg.DEFAULT_BRACKET == (0.8, 1.6)
    assert cfg.LOG_LEVEL == "DEBUG"


def test_logger_does_not_stack_handlers(tmp_path):
    log_file = tmp_path / "logs" / "selection.log"
    root = setup_logger("DEBUG", str(log_file))
    try:
        setup_logger("DEBUG", str(log_file))
        ours = [h for h in root.handlers if getattr(h, "_selection_handler", False)]
        assert len(ours) == 2
        assert root.level == logging.DEBUG
        logging.getLogger("splitting.test").info("hello")
        for handler in ours:
            handler.flush()
        assert "splitting.test - INFO - hello" in log_file.read_text()
    finally:
        for handler in list(root.handlers):
            if getattr(handler, "_selection_handler", False):
                root.removeHandler(handler)
                handler.close()
        root.setLevel(logging.WARNING)


def test_logger_leaves_other_loggers_alone():
    root = setup_logger("INFO")
    try:
        for name in ("splitting", "splitting.protocol", "matplotlib"):
            assert logging.getLogger(name).level == logging.NOTSET
    finally:
        for handler in list(root.handlers):
            if getattr(handler, "_selection_handler", False):
                root.removeHandler(handler)
                handler.close()
        root.setLevel(logging.WARNING)
