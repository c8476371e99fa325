"""
DSL Error Types - Structured Error Handling

Provides the exception hierarchy raised by the toolkit and a structured
error record used by the command line to report failures.

Classes:
    - DSLException: Base exception carrying a category and exit code
    - DSLError: Structured error record (type, message, friendly text, exit code)
    - PixelFlag: Per-pixel diagnostic bits stored next to result arrays

Functions:
    - create_error_response(): Maps any exception to a DSLError
"""

from dataclasses import dataclass
from enum import IntFlag
from typing import Any, Dict, Optional


class DSLException(Exception):
    """Base class for every error raised by the toolkit."""

    category = "error"
    exit_code = 1
    friendly = "Something went wrong."

    def __init__(self, message: str = ""):
        super().__init__(message or self.friendly)


class ConfigError(DSLException):
    category = "config"
    exit_code = 2
    friendly = "The configuration is invalid."


class ParseError(DSLException):
    """Malformed input file. Carries the byte offset where decoding failed."""

    category = "parse"
    exit_code = 3
    friendly = "An input file could not be parsed."

    def __init__(self, message: str, path: Optional[str] = None, offset: int = 0):
        self.path = path
        self.offset = int(offset)
        where = f"{path} at byte {self.offset}" if path else f"byte {self.offset}"
        super().__init__(f"{message} ({where})")


class DependencyError(DSLException):
    category = "dependency"
    exit_code = 4
    friendly = "A required artifact is missing. Run the producing subcommand first."


class DomainError(DSLException):
    category = "domain"
    exit_code = 5
    friendly = "An argument is outside the domain of the operation."


class ProjectionError(DomainError):
    friendly = "A point lies at or behind the projection center."


class EvanescentOrderError(DomainError):
    friendly = "The diffraction order does not propagate for this direction."


class SpectralRangeError(DSLException):
    category = "range"
    exit_code = 6
    friendly = "Wavelength ranges do not overlap."


class CorrespondenceRangeError(SpectralRangeError):
    friendly = "Query lies outside the correspondence model hull."


class CoverageError(SpectralRangeError):
    friendly = "Projector column is not covered by any scanline pattern."


class ConvergenceError(DSLException):
    category = "convergence"
    exit_code = 7
    friendly = "An iterative solver did not converge."


class FitError(ConvergenceError):
    """Power-law fit failure carrying the best coefficients reached."""

    friendly = "Curve fit did not converge."

    def __init__(self, message: str, best: Optional[Any] = None):
        self.best = best
        super().__init__(message)


class UndefinedMetricError(DSLException):
    category = "undefined"
    exit_code = 8
    friendly = "A metric is undefined for this input."


class PixelFlag(IntFlag):
    """Per-pixel diagnostic bits. Failures on single pixels never raise."""

    OK = 0
    INVALID_DEPTH = 1
    OUT_OF_HULL = 2
    SATURATED = 4
    UNSOLVABLE = 8
    DIVERGED = 16
    NO_ORDERS = 32


@dataclass
class DSLError:
    """
    Represents a toolkit error in a structured format.

    Attributes:
        error_type: Exception class name (e.g., "ParseError")
        error_message: Detailed error message
        friendly_message: Short message for the terminal
        exit_code: Process exit code for the error category
    """
    error_type: str
    error_message: str
    friendly_message: str
    exit_code: int = 1

    def to_detailed_string(self) -> str:
        """
        Returns detailed error string in format: 'ErrorType: message'

        Returns:
            Formatted error string with type and message
        """
        return f"{self.error_type}: {self.error_message}"

    def to_friendly_string(self) -> str:
        return self.friendly_message

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_type": self.error_type,
            "error_message": self.error_message,
            "friendly_message": self.friendly_message,
            "exit_code": self.exit_code,
        }


def create_error_response(exception: BaseException) -> DSLError:
    """
    Creates a structured error from an exception.

    Args:
        exception: The exception that was raised

    Returns:
        DSLError with category-specific friendly text and exit code
    """
    error_type = type(exception).__name__
    error_message = str(exception)

    if isinstance(exception, DSLException):
        return DSLError(error_type, error_message, exception.friendly, exception.exit_code)

    if isinstance(exception, FileNotFoundError):
        return DSLError(error_type, error_message,
                        DependencyError.friendly, DependencyError.exit_code)
    if isinstance(exception, (ValueError, TypeError)):
        return DSLError(error_type, error_message,
                        "Invalid input value.", DomainError.exit_code)
    if isinstance(exception, KeyboardInterrupt):
        return DSLError(error_type, "interrupted", "Interrupted by user.", 130)

    return DSLError(error_type, error_message, "Unexpected error. See the log file.", 1)
