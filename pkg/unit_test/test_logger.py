import logging

from config import Config
from logger import error_logger, info_logger, make_logger, setFormatter


def test_log_path(tmp_path, monkeypatch):
    monkeypatch.setattr(Config, "LOG_DIR", str(tmp_path))
    monkeypatch.setattr(Config, "LOG_FILE_NAME", "engine.log")
    assert Config.log_path() == str(tmp_path / "engine.log")

    absolute = str(tmp_path / "elsewhere" / "run.log")
    monkeypatch.setattr(Config, "LOG_FILE_NAME", absolute)
    assert Config.log_path() == absolute


def test_engine_loggers_share_the_log_file():
    """
    Tests that both loggers write to one file handler and keep out of the root logger
    """
    for logger in (info_logger, error_logger):
        assert logger.propagate is False
        files = [h for h in logger.handlers if isinstance(h, logging.FileHandler)]
        assert len(files) == 1
    assert info_logger.handlers[0] is error_logger.handlers[0]
    assert error_logger.level == logging.ERROR


def test_make_logger_formats_and_is_idempotent(tmp_path):
    path = tmp_path / "test.log"
    handler = setFormatter(str(path))
    logger = make_logger("DDS_Latency_test", logging.INFO, handler)
    again = make_logger("DDS_Latency_test", logging.INFO, handler)
    assert again is logger
    assert len(logger.handlers) == 2

    logger.info("steady state reached")
    handler.flush()
    assert " - DDS_Latency_test - INFO - steady state reached" in path.read_text(encoding="utf-8")
    stream = [h for h in logger.handlers if not isinstance(h, logging.FileHandler)][0]
    assert stream.level >= Config.CONSOLE_LOG_LEVEL
    handler.close()
