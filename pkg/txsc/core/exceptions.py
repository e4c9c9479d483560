"""
Custom exceptions and the CLI-level exception handler.

Every failure the toolkit reports deliberately derives from TXSCException
and carries the process exit code the CLI should return for it.
"""

from typing import Any, Iterable, Optional

from .logging import get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_NOT_SERIALIZABLE = 3
EXIT_RECIPE_FAILED = 4


class TXSCException(Exception):
    """Base exception class for toolkit errors."""

    def __init__(self, message: str, exit_code: int = EXIT_INTERNAL):
        self.message = message
        self.exit_code = exit_code
        super().__init__(self.message)


class DSLSyntaxError(TXSCException):
    """Exception raised when contract source does not match the grammar."""

    def __init__(self, message: str, location: Any = None, expected: Iterable[str] = ()):
        self.location = location
        self.expected = sorted(set(expected))
        if location is not None:
            message = f"{location.line}:{location.column}: {message}"
        if self.expected:
            message = f"{message} (expected one of: {', '.join(self.expected)})"
        super().__init__(message, EXIT_USAGE)


class DuplicateName(TXSCException):
    """Exception raised when a contract declares the same name twice."""

    def __init__(self, name: str, kind: str, location: Any = None):
        self.name = name
        self.kind = kind
        self.location = location
        where = f"{location.line}:{location.column}: " if location is not None else ""
        super().__init__(f"{where}duplicate {kind} name '{name}'", EXIT_USAGE)


class TypecheckFailed(TXSCException):
    """Exception raised when a compiled contract has type diagnostics."""

    def __init__(self, contract: str, diagnostics: list):
        self.diagnostics = diagnostics
        lines = [
            f"{d.line}:{d.column}: {d.kind}: {d.message}" for d in diagnostics
        ]
        super().__init__(
            f"contract '{contract}' does not typecheck:\n  " + "\n  ".join(lines), EXIT_USAGE
        )


class AnalysisError(TXSCException):
    """Exception raised when a contract violates the transaction model."""


class NotSdtf(TXSCException):
    """Exception raised when a check set is requested for a non-SDTF function."""

    def __init__(self, function: str, classification: str):
        self.function = function
        super().__init__(f"function '{function}' is {classification}, not SDTF")


class TransformError(TXSCException):
    """Base class for rewriting failures."""


class MissingProfile(TransformError):
    """Exception raised when a function has no analysis profile."""

    def __init__(self, function: str):
        self.function = function
        super().__init__(f"no analysis profile for function '{function}'")


class ExclusionNotInReadSet(TransformError):
    """Exception raised when a check exclusion names an attribute outside the read set."""

    def __init__(self, function: str, attribute: str):
        self.function = function
        self.attribute = attribute
        super().__init__(
            f"exclusion '{attribute}' is not in the read set of '{function}'"
        )


class NoCallbackForCdtf(TransformError):
    """Exception raised when a CDTF with external calls has no designated callback."""

    def __init__(self, function: str):
        self.function = function
        super().__init__(f"CDTF '{function}' has external calls but no designated callback")


class UnknownFunction(TXSCException):
    """Exception raised when a call names a function the contract does not declare."""

    def __init__(self, contract: str, function: str):
        self.function = function
        super().__init__(f"contract '{contract}' has no function '{function}'")


class ConfigError(TXSCException):
    """Exception raised when a scenario or transform config is invalid."""

    def __init__(self, message: str):
        super().__init__(message, EXIT_USAGE)


class ReplayMismatch(TXSCException):
    """Exception raised when re-executing blocks does not reproduce chain state."""


class LockError(TXSCException):
    """Base class for lock-manager failures."""


class UnknownLock(LockError):
    def __init__(self, lock_id: str):
        self.lock_id = lock_id
        super().__init__(f"unknown lock '{lock_id}'")


class AlreadyReleased(LockError):
    def __init__(self, lock_id: str, status: str):
        self.lock_id = lock_id
        super().__init__(f"lock '{lock_id}' is already {status}")


class BoundExceeded(TXSCException):
    """Exception raised when the permutation oracle bound is exceeded without fallback."""

    def __init__(self, spans: int, bound: int):
        super().__init__(
            f"history has {spans} spans, above the permutation bound {bound}"
        )


class RecipeFailed(TXSCException):
    """Exception raised when a recipe assertion does not hold."""

    def __init__(self, recipe: str, assertion: str, report: Optional[Any] = None):
        self.recipe = recipe
        self.assertion = assertion
        self.report = report
        super().__init__(f"recipe '{recipe}' failed: {assertion}", EXIT_RECIPE_FAILED)


def handle_exception(exc: BaseException) -> int:
    """
    Log an exception raised by a command and map it to an exit code.

    Toolkit errors are reported with their own message; anything else is
    logged with its traceback and reported as an internal error.

    Args:
        exc: The exception that escaped a command

    Returns:
        int: The process exit code
    """
    if isinstance(exc, TXSCException):
        logger.error(exc.message, extra={"exception_type": type(exc).__name__})
        return exc.exit_code

    logger.error(f"Unexpected error: {exc}", exc_info=exc)
    return EXIT_INTERNAL
