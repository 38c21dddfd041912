"""Tests for exteam.logging_config."""

import logging
import sys

from exteam.logging_config import (
    PACKAGE_LOGGER,
    WARNINGS_LOGGER,
    reset_logging,
    setup_file_logging,
    setup_logging,
)


class TestSetupLogging:
    def teardown_method(self):
        reset_logging()

    def test_default_level_is_info(self):
        setup_logging()
        root = logging.getLogger("exteam")
        assert root.level == logging.INFO

    def test_debug_level(self):
        setup_logging(level=logging.DEBUG)
        root = logging.getLogger("exteam")
        assert root.level == logging.DEBUG

    def test_outputs_to_stderr(self):
        """stdout은 CSV 출력용으로 비워 둔다."""
        setup_logging()
        root = logging.getLogger("exteam")
        assert len(root.handlers) == 1
        handler = root.handlers[0]
        assert isinstance(handler, logging.StreamHandler)
        assert handler.stream is sys.stderr

    def test_idempotent(self):
        setup_logging()
        setup_logging()
        root = logging.getLogger("exteam")
        assert len(root.handlers) == 1

    def test_captures_python_warnings(self):
        """numpy/scipy 경고도 같은 stderr 핸들러로."""
        setup_logging()
        captured = logging.getLogger(WARNINGS_LOGGER)
        assert captured.handlers == logging.getLogger(PACKAGE_LOGGER).handlers
        assert not captured.propagate


class TestFileLogging:
    def teardown_method(self):
        reset_logging()

    def test_creates_log_file(self, tmp_path):
        setup_logging(level=logging.DEBUG)
        handler = setup_file_logging(tmp_path / ".log")
        logging.getLogger("exteam.test").debug("hello file")
        handler.flush()
        files = list((tmp_path / ".log").glob("*.log"))
        assert len(files) == 1
        assert "hello file" in files[0].read_text(encoding="utf-8")

    def test_command_prefix(self, tmp_path):
        setup_file_logging(tmp_path, "scaling gap")
        files = list(tmp_path.glob("*.log"))
        assert len(files) == 1
        assert files[0].name.startswith("scaling-gap_")

    def test_warnings_reach_file(self, tmp_path):
        setup_logging()
        handler = setup_file_logging(tmp_path)
        logging.getLogger(WARNINGS_LOGGER).warning("overflow in exp")
        handler.flush()
        text = next(tmp_path.glob("*.log")).read_text(encoding="utf-8")
        assert "overflow in exp" in text

    def test_handler_level_is_debug(self, tmp_path):
        handler = setup_file_logging(tmp_path)
        assert handler.level == logging.DEBUG


class TestResetLogging:
    def test_reset_clears_handlers(self):
        setup_logging()
        root = logging.getLogger("exteam")
        assert len(root.handlers) == 1
        reset_logging()
        assert len(root.handlers) == 0
        assert logging.getLogger(WARNINGS_LOGGER).handlers == []
        assert logging.getLogger(WARNINGS_LOGGER).propagate

    def test_reset_allows_reconfigure(self):
        setup_logging(level=logging.INFO)
        reset_logging()
        setup_logging(level=logging.DEBUG)
        root = logging.getLogger("exteam")
        assert root.level == logging.DEBUG
        assert len(root.handlers) == 1
