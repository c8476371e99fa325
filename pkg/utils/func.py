import datetime
import logging
import os
from typing import Any, Dict, Optional

import psutil
import yaml
from colorama import Fore, init

from utils.error_types import ConfigError


class ColoredFormatter(logging.Formatter):
    """Custom formatter that adds colors to log messages based on severity level."""

    def format(self, record):
        LOG_COLORS = {
            "DEBUG": Fore.CYAN,
            "INFO": Fore.GREEN,
            "WARNING": Fore.YELLOW,
            "ERROR": Fore.RED,
            "CRITICAL": Fore.RED + "\033[1m",
        }
        log_color = LOG_COLORS.get(record.levelname, Fore.WHITE)

        timestamp = datetime.datetime.fromtimestamp(
            record.created).strftime('%H:%M:%S')
        message = record.getMessage()

        # Display: [HH:MM:SS] LEVEL    [file:line] - message
        return f"{log_color}[{timestamp}] {record.levelname:<8} [{record.filename}:{record.lineno}] {Fore.RESET}- {message}"


def load_config(path: str = "config.yml") -> Dict[str, Any]:
    """
    Loads configuration from the YAML file without using logging.

    Args:
        path: Path of the YAML configuration file

    Returns:
        Dict[str, Any]: Configuration data, empty when the file is missing
    """
    if not os.path.exists(path):
        return {}
    try:
        with open(path, "r", encoding="utf-8") as file:
            data = yaml.safe_load(file)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"cannot parse '{path}'{where}: {e}")
    return data or {}


def setup_logging(debug_mode: bool = False, log_file: Optional[str] = "dsl.log") -> logging.Logger:
    """
    Configures logging: sets up a file handler and a console handler with colors.

    Args:
        debug_mode (bool): Whether to enable debug logging to console
        log_file: Log file path, None disables file logging

    Returns:
        logging.Logger: Configured root logger
    """
    init(autoreset=True)

    # Remove any existing handlers to ensure basicConfig applies correctly
    for handler in logging.root.handlers[:]:
        logging.root.removeHandler(handler)

    if log_file:
        logging.basicConfig(
            level=logging.DEBUG,
            filename=log_file,
            filemode="a",
            format="[%(filename)s] %(levelname)s : %(message)s",
            encoding="utf-8",
        )
    else:
        logging.root.setLevel(logging.DEBUG)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.DEBUG if debug_mode else logging.INFO)
    console_handler.setFormatter(ColoredFormatter())

    root_logger = logging.getLogger()
    root_logger.addHandler(console_handler)

    # Silence noisy third-party libraries
    logging.getLogger("joblib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)

    return root_logger


def progress_enabled() -> bool:
    """True when INFO records reach the console, used to gate tqdm bars."""
    return log.isEnabledFor(logging.INFO) and any(
        isinstance(h, logging.StreamHandler) and h.level <= logging.INFO
        for h in logging.getLogger().handlers
    )


def get_output_dir(config: Dict[str, Any]) -> str:
    """
    Get the output directory from configuration.

    Returns:
        str: Output directory, "out" by default
    """
    return config.get("Paths", {}).get("output_dir", "out")


def get_thread_count(config: Optional[Dict[str, Any]] = None) -> int:
    """
    Resolve the worker count.

    DSL_THREADS caps the value; a configured 0 means "all physical cores".

    Returns:
        int: Number of workers, at least 1
    """
    configured = int((config or {}).get("Options", {}).get("threads", 0) or 0)
    cores = psutil.cpu_count(logical=False) or 1
    threads = configured if configured > 0 else cores

    env = os.environ.get("DSL_THREADS")
    if env:
        try:
            threads = min(threads, max(1, int(env)))
        except ValueError:
            log.warning("Ignoring non-integer DSL_THREADS=%r", env)
    return max(1, threads)


def get_version() -> str:
    """
    Read the toolkit version from version.txt at the repository root.

    Returns:
        str: Version string, "1.0.0" if the file is missing
    """
    path = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "version.txt")
    try:
        with open(path, "r", encoding="utf-8") as file:
            return file.read().strip() or "1.0.0"
    except FileNotFoundError:
        log.warning("version.txt not found, returning default version")
        return "1.0.0"


log = logging.getLogger("dsl")
