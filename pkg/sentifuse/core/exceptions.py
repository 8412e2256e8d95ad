"""
Core Exceptions - Custom exception classes for SentiFuse.

This module defines the exception hierarchy used throughout the package.
Every class carries the process exit code the CLI reports for it, so
library code can raise freely and leave the exit decision to the CLI.
"""

from typing import Any, Optional


class SentiFuseError(Exception):
    """Base exception class for all SentiFuse-specific errors."""

    exit_code: int = 1

    def __init__(self, message: str, details: Optional[Any] = None):
        """
        Initialize SentiFuse error.

        Args:
            message: Human-readable error message
            details: Additional error details for debugging
        """
        super().__init__(message)
        self.message = message
        self.details = details

    def __str__(self) -> str:
        return self.message


class ConfigurationError(SentiFuseError):
    """Raised when a run configuration is missing, malformed or inconsistent."""

    exit_code = 1

    def __init__(self, message: str, config_path: Optional[str] = None, details: Optional[Any] = None):
        """
        Initialize configuration error.

        Args:
            message: Error description
            config_path: Path to the problematic configuration file
            details: Additional error context
        """
        super().__init__(message, details)
        self.config_path = config_path


class UsageError(SentiFuseError):
    """Raised when a command is invoked with an invalid combination of inputs."""

    exit_code = 1


class DataError(SentiFuseError):
    """Raised for unreadable files, malformed tables and inconsistent shapes."""

    exit_code = 2

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        row: Optional[int] = None,
        details: Optional[Any] = None,
    ):
        """
        Initialize data error.

        Args:
            message: Error description
            path: File that caused the error, if any
            row: 1-based data row number, if the error is row specific
            details: Additional error context
        """
        super().__init__(message, details)
        self.path = path
        self.row = row


class ValidationError(DataError):
    """Raised when a value violates a documented precondition."""

    def __init__(
        self,
        message: str,
        field_name: Optional[str] = None,
        invalid_value: Optional[Any] = None,
        details: Optional[Any] = None,
    ):
        """
        Initialize validation error.

        Args:
            message: Error description
            field_name: Name of the argument or field that failed validation
            invalid_value: The offending value
            details: Additional error context
        """
        super().__init__(message, details=details)
        self.field_name = field_name
        self.invalid_value = invalid_value


class ModelStateError(SentiFuseError):
    """Raised when a model or transformer is used in the wrong state."""

    exit_code = 2


class NumericError(SentiFuseError):
    """Raised when a computation produces or receives non-finite values."""

    exit_code = 3


__all__ = [
    "SentiFuseError",
    "ConfigurationError",
    "UsageError",
    "DataError",
    "ValidationError",
    "ModelStateError",
    "NumericError",
]
