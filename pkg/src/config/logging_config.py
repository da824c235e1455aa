import logging
import logging.handlers
from pathlib import Path
from typing import Union

from .settings import settings

FILE_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
CONSOLE_FORMAT = '%(levelname)s %(name)s: %(message)s'
QUIET_LOGGERS = ("cvxpy", "matplotlib")


def _level(value: Union[int, str]) -> int:
    return value if isinstance(value, int) else logging.getLevelName(value.upper())


def setup_logging(
    log_file: str = "run.log",
    log_level: Union[int, str] = settings.LOG_LEVEL,
    log_dir: str = settings.LOG_DIR,
    file_level: Union[int, str] = logging.DEBUG,
):
    """Console at log_level, rotating run.log in log_dir (the run's output directory when called from the CLI)."""
    Path(log_dir).mkdir(parents=True, exist_ok=True)

    root_logger = logging.getLogger()
    root_logger.setLevel(min(_level(log_level), _level(file_level)))

    for handler in list(root_logger.handlers):
        handler.close()
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(logging.Formatter(CONSOLE_FORMAT))
    root_logger.addHandler(console_handler)

    # Per-iteration records go to the file only
    file_handler = logging.handlers.RotatingFileHandler(
        Path(log_dir) / log_file,
        maxBytes=2*1024*1024,  # 2MB
        backupCount=2
    )
    file_handler.setLevel(file_level)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt='%Y-%m-%d %H:%M:%S'))
    root_logger.addHandler(file_handler)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    return root_logger
