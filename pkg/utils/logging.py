"""
Process-wide logger for the laboratory.

One target at a time (console or file), integer levels from LoggingConstants,
lines tagged with wall time and seconds since startup. Console lines go to
stderr; stdout is reserved for command output.
"""

import os
import platform
import sys
import time
import traceback
from contextlib import contextmanager
from datetime import datetime
from typing import IO, Iterator, List, Optional

import numpy
import scipy

from constants import FileConstants, LoggingConstants

loglevel_debug = LoggingConstants.DEBUG
loglevel_info = LoggingConstants.INFO
loglevel_warning = LoggingConstants.WARNING
loglevel_error = LoggingConstants.ERROR
loglevel_critical = LoggingConstants.CRITICAL

logtarget_console = LoggingConstants.CONSOLE
logtarget_file = LoggingConstants.FILE

logtarget = logtarget_console
loglevel = loglevel_info
logfile = FileConstants.LOG_FILENAME
logfile_handle: Optional[IO[str]] = None

_started = time.monotonic()

_LEVEL_NAMES = {
    "DEBUG": loglevel_debug,
    "INFO": loglevel_info,
    "WARNING": loglevel_warning,
    "ERROR": loglevel_error,
    "CRITICAL": loglevel_critical,
}
_TARGET_NAMES = {"console": logtarget_console, "file": logtarget_file}


def loglevel_to_string(level: int) -> str:
    """Three-letter tag of a level; "UNK" for anything else."""
    return LoggingConstants.LEVEL_STRINGS.get(level, "UNK")


def parse_loglevel(name: str) -> int:
    """
    Level integer for a case-insensitive name such as "debug".

    Raises:
        ValueError: unknown level name
    """
    try:
        return _LEVEL_NAMES[name.upper()]
    except KeyError:
        raise ValueError(f"Invalid log level: {name}") from None


def _format(message: str, level: int) -> str:
    stamp = datetime.now().strftime("%y%m%d %H%M%S")
    return f"{stamp} {time.monotonic() - _started:<.3f} [{loglevel_to_string(level)}]: {message}"


def _file_handle() -> IO[str]:
    global logfile_handle
    if not logfile:
        raise ValueError("Log file target selected but no log file is set")
    if logfile_handle is None:
        logfile_handle = open(logfile, "a")
    return logfile_handle


def log(message: str, level: int = loglevel_info):
    """
    Write one line to the current target if `level` passes the threshold.

    Args:
        message (str): text to log
        level (int): one of the loglevel_* values
    """
    if level < loglevel:
        return
    line = _format(message, level)
    if logtarget == logtarget_file:
        handle = _file_handle()
        handle.write(line + "\n")
        handle.flush()
    else:
        print(line, file=sys.stderr)


def log_error(message: str):
    log(message, level=loglevel_error)


def log_info(message: str):
    log(message, level=loglevel_info)


def log_debug(message: str):
    log(message, level=loglevel_debug)


def log_warning(message: str):
    log(message, level=loglevel_warning)


def log_critical(message: str):
    log(message, level=loglevel_critical)


def log_exception(exception: Exception):
    """Error line with the message; the traceback goes to debug."""
    log_error(f"{type(exception).__name__}: {exception}")
    trace = "".join(traceback.format_exception(type(exception), exception, exception.__traceback__))
    log_debug(f"Stack trace:\n{trace}")


@contextmanager
def log_timed(label: str, level: int = loglevel_debug) -> Iterator[None]:
    """Log `label` with its elapsed seconds when the block exits (also on error)."""
    start = time.perf_counter()
    try:
        yield
    finally:
        log(f"{label} took {time.perf_counter() - start:.3f}s", level)


def ensure_log_directory(file: str = FileConstants.LOG_FILENAME):
    directory = os.path.dirname(file)
    if directory:
        os.makedirs(directory, exist_ok=True)


def _close_file():
    global logfile_handle
    if logfile_handle is not None:
        logfile_handle.close()
        logfile_handle = None


def setup_logging_console(level: int = loglevel_info):
    """Log to stderr from `level` up."""
    global logtarget, loglevel
    _close_file()
    logtarget = logtarget_console
    loglevel = level


def setup_logging_file(file: str = FileConstants.LOG_FILENAME, level: int = loglevel_info):
    """
    Append to `file` from `level` up, creating its directory.

    Args:
        file (str): log file path
        level (int): threshold
    """
    global logtarget, logfile, loglevel
    if file != logfile:
        _close_file()
    ensure_log_directory(file)
    logtarget = logtarget_file
    logfile = file
    loglevel = level


def _option(argv: List[str], flag: str) -> Optional[str]:
    if flag not in argv:
        return None
    idx = argv.index(flag)
    if idx + 1 >= len(argv):
        raise ValueError(f"No value provided after {flag}")
    return argv[idx + 1]


def _log_environment():
    system = platform.system()
    release = platform.release()
    log_debug(f"Python {platform.python_version()} on {system} {release}")
    log_debug(f"numpy {numpy.__version__}, scipy {scipy.__version__}")


def log_startup(argv: Optional[List[str]] = None):
    """
    Configure logging from --log-file, --log-level and --log-target.

    A log file gets a ".log" suffix if it has none and implies the file target.

    Raises:
        ValueError: missing option value, unknown level or unknown target
    """
    argv = sys.argv if argv is None else argv
    file = _option(argv, "--log-file")
    level_name = _option(argv, "--log-level")
    target_name = _option(argv, "--log-target")

    level = parse_loglevel(level_name) if level_name is not None else loglevel_info
    target = logtarget_console
    if file is not None:
        target = logtarget_file
        if not file.endswith(".log"):
            file += ".log"
    if target_name is not None:
        if target_name.lower() not in _TARGET_NAMES:
            raise ValueError(f"Invalid log target: {target_name}")
        target = _TARGET_NAMES[target_name.lower()]

    if target == logtarget_file:
        setup_logging_file(file or FileConstants.LOG_FILENAME, level)
        log_info(f"Log file: {logfile}")
    else:
        setup_logging_console(level)
    _log_environment()


def log_shutdown(exit_code: int = 0):
    """Log the exit code and release the log file."""
    log_info(f"Shutting down with exit code {exit_code}.")
    _close_file()
