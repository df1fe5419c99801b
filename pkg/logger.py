import logging
import os
import sys

from config import Config


def setFormatter(fileName):
    #Creates a file handler with a formatter for logging

    formatter = logging.Formatter(Config.LOG_FORMAT)

    file_handler = logging.FileHandler(fileName)
    file_handler.setFormatter(formatter)

    return file_handler


def make_logger(name, level, file_handler):
    """
    Engine logger writing to the shared log file and to stderr

    Stdout stays free for the CSV and JSON the command line prints.

    Params:
        name (str): logger name
        level (int): logging level
        file_handler (logging.FileHandler): shared file handler

    Returns:
        logging.Logger: the configured logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(level)
    logger.propagate = False
    if not logger.handlers:
        stream_handler = logging.StreamHandler(sys.stderr)
        stream_handler.setLevel(max(level, Config.CONSOLE_LOG_LEVEL))
        logger.addHandler(file_handler)
        logger.addHandler(stream_handler)
    return logger


log_path = Config.log_path()
os.makedirs(os.path.dirname(log_path), exist_ok=True)

#Formatter
fileFormatter = setFormatter(log_path)

# Solver, simulator and runner progress
info_logger = make_logger("DDS_Latency_info", Config.LOG_LEVEL, fileFormatter)

# Unconverged solves, failed validations and rejected input
error_logger = make_logger("DDS_Latency_error", logging.ERROR, fileFormatter)

info_logger.info(f"Logging Running, writing to {log_path}")
