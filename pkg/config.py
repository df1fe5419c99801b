import logging
import os
from dotenv import load_dotenv

load_dotenv()

# Get the absolute path of the directory containing this file
basedir = os.path.abspath(os.path.dirname(__file__))


class Config:

    LOG_FILE_NAME = os.environ.get('LOG_FILE_NAME', 'log.txt')
    LOG_DIR = os.environ.get('LOG_DIR', basedir)
    LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    LOG_LEVEL = logging.getLevelName(os.environ.get('LOG_LEVEL', 'INFO').upper())
    # stderr threshold; the log file follows LOG_LEVEL
    CONSOLE_LOG_LEVEL = logging.getLevelName(os.environ.get('CONSOLE_LOG_LEVEL', 'WARNING').upper())

    # Bundled reference table; PLA_DATA_DIR points at another copy
    DATA_DIR = os.environ.get('PLA_DATA_DIR', os.path.join(basedir, 'data'))
    REFERENCE_FILE = 'appendix_b.csv'

    DEFAULT_SEED = int(os.environ.get('DEFAULT_SEED', 2025))
    DEFAULT_MESSAGES = int(os.environ.get('DEFAULT_MESSAGES', 5000))
    DEFAULT_JOBS = int(os.environ.get('DEFAULT_JOBS', 1))

    # Upper bound on messages simulated per web request
    MAX_WEB_MESSAGES = int(os.environ.get('MAX_WEB_MESSAGES', 20000))

    @staticmethod
    def reference_path():
        """
        Path of the reference table, re-reading PLA_DATA_DIR so tests can override it

        Returns:
            str: absolute path of the reference CSV
        """
        data_dir = os.environ.get('PLA_DATA_DIR', Config.DATA_DIR)
        return os.path.join(data_dir, Config.REFERENCE_FILE)

    @staticmethod
    def log_path():
        """
        Log file path; a bare LOG_FILE_NAME lands in LOG_DIR

        Returns:
            str: absolute path of the log file
        """
        if os.path.isabs(Config.LOG_FILE_NAME):
            return Config.LOG_FILE_NAME
        return os.path.join(Config.LOG_DIR, Config.LOG_FILE_NAME)
