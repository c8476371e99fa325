"""
Persistence Utilities

This module provides the JSON persistence helpers used for manifests,
metrics and calibration reports.

Functions:
    - read_json: Read JSON file
    - write_json: Write JSON file with stable key order
    - ensure_dir: Create a directory (and parents) if missing
"""

import json
import logging
import os
from typing import Any, Dict, Optional

from utils.error_types import DependencyError, ParseError


# Get logger
log = logging.getLogger(__name__)


def ensure_dir(path: str) -> str:
    """Creates `path` if needed and returns it."""
    if path:
        os.makedirs(path, exist_ok=True)
    return path


def read_json(file_path: str, required: bool = True) -> Optional[Dict[str, Any]]:
    """
    Reads and returns the content of a JSON file.

    Args:
        file_path: Path to the JSON file
        required: Raise DependencyError when the file is missing; otherwise return None

    Returns:
        Optional[Dict[str, Any]]: JSON content

    Raises:
        DependencyError: File missing and required
        ParseError: File is not valid JSON (offset is the failing byte)
    """
    try:
        with open(file_path, "rb") as file:
            raw = file.read()
    except FileNotFoundError:
        if required:
            raise DependencyError(f"missing artifact '{file_path}'")
        return None

    try:
        return json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as e:
        raise ParseError("invalid UTF-8", file_path, e.start)
    except json.JSONDecodeError as e:
        log.error("Error decoding JSON file '%s': %s", file_path, e)
        text = raw.decode("utf-8")
        raise ParseError(e.msg, file_path, len(text[:e.pos].encode("utf-8")))


def write_json(file_path: str, data: Dict[str, Any]) -> None:
    """
    Writes the provided data to a JSON file.

    Keys are sorted so identical inputs produce byte-identical files.

    Args:
        file_path: Path to the JSON file
        data: Data to write
    """
    ensure_dir(os.path.dirname(file_path))
    try:
        with open(file_path, "w", encoding="utf-8", newline="\n") as file:
            json.dump(data, file, ensure_ascii=False, indent=4, sort_keys=True)
            file.write("\n")
    except OSError as e:
        log.error("Error saving JSON file '%s': %s", file_path, e)
        raise
