import logging
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

from pydantic import ValidationError

from src.core.exceptions import (
    ActionExitError,
    DecodeError,
    EmptyDatasetError,
    HeterogeneousDatasetError,
    ShapeMismatchError,
    TraceFormatError,
)


logger = logging.getLogger(__name__)

# --- Process exit statuses ---
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_DATA = 4
EXIT_DECODE = 5
EXIT_IO = 6
EXIT_CHECK_FAILED = 7

Handler = Callable[[BaseException, str], Tuple[int, Dict[str, Any]]]


def _error_payload(
    code: int,
    message: str,
    command: str,
    *,
    details: Optional[List[Dict[str, Any]]] = None,
    error_type: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Build a unified error payload.

    :param code: Process exit status
    :param message: Short description of the error
    :param command: CLI subcommand that failed
    :param details: Optional validation or context details
    :param error_type: Exception class name
    :return: Dict with structured error information
    """
    payload: Dict[str, Any] = {
        "error": {
            "code": code,
            "message": message,
            "command": command,
        }
    }
    if error_type:
        payload["error"]["type"] = error_type
    if details:
        payload["error"]["details"] = details
    return payload


def validation_error_handler(exc: ValidationError, command: str) -> Tuple[int, Dict[str, Any]]:
    """
    Handle pydantic validation errors (status 3).

    Example payload::

        {
            "error": {
                "code": 3,
                "message": "Validation failed",
                "command": "run",
                "type": "ValidationError",
                "details": [
                    {"loc": ["delta", "delta"], "msg": "Input should be greater than 0", "type": "greater_than"}
                ]
            }
        }
    """
    details: List[Dict[str, Any]] = []
    for err in exc.errors():
        details.append(
            {
                "loc": list(err.get("loc", [])),
                "msg": err.get("msg", ""),
                "type": err.get("type", ""),
            }
        )
    return EXIT_VALIDATION, _error_payload(
        EXIT_VALIDATION, "Validation failed", command, details=details, error_type="ValidationError"
    )


def _domain_handler(code: int) -> Handler:
    def handler(exc: BaseException, command: str) -> Tuple[int, Dict[str, Any]]:
        details = [getattr(exc, "details", {})] if getattr(exc, "details", None) else None
        return code, _error_payload(code, str(exc), command, details=details, error_type=type(exc).__name__)

    return handler


def io_error_handler(exc: OSError, command: str) -> Tuple[int, Dict[str, Any]]:
    """Handle file system errors (status 6)."""
    message = f"{exc.strerror or 'I/O error'}: {exc.filename}" if exc.filename else str(exc)
    return EXIT_IO, _error_payload(EXIT_IO, message, command, error_type=type(exc).__name__)


def on_unhandled(exc: BaseException, command: str) -> Tuple[int, Dict[str, Any]]:
    """Handle anything else (status 1)."""
    return EXIT_UNEXPECTED, _error_payload(
        EXIT_UNEXPECTED, f"Internal error: {exc}", command, error_type=type(exc).__name__
    )


#: Checked in order; the first matching exception type wins.
EXCEPTION_HANDLERS: List[Tuple[Type[BaseException], Handler]] = [
    (ValidationError, validation_error_handler),
    (DecodeError, _domain_handler(EXIT_DECODE)),
    (TraceFormatError, _domain_handler(EXIT_DATA)),
    (ShapeMismatchError, _domain_handler(EXIT_DATA)),
    (EmptyDatasetError, _domain_handler(EXIT_DATA)),
    (HeterogeneousDatasetError, _domain_handler(EXIT_DATA)),
    (ActionExitError, _domain_handler(EXIT_VALIDATION)),
    (ValueError, _domain_handler(EXIT_VALIDATION)),
    (OSError, io_error_handler),
    (Exception, on_unhandled),
]


def handle_exception(exc: BaseException, command: str) -> Tuple[int, str]:
    """
    Map an exception raised by a subcommand to an exit status.

    Logs the structured payload at ERROR level and returns the status with a
    one-line diagnostic for standard error.

    :param exc: Raised exception.
    :type exc: BaseException
    :param command: Subcommand name.
    :type command: str
    :return: ``(status, diagnostic_line)``
    :rtype: tuple[int, str]
    """
    for exc_type, handler in EXCEPTION_HANDLERS:
        if isinstance(exc, exc_type):
            status, payload = handler(exc, command)
            break
    else:
        status, payload = on_unhandled(exc, command)

    error = payload["error"]
    logger.error(f"{command} failed: {error['message']}", extra={"error": error})
    if status == EXIT_UNEXPECTED:
        logger.debug("Unhandled exception", exc_info=exc)

    message = error["message"]
    if "details" in error and status == EXIT_VALIDATION and error.get("type") == "ValidationError":
        first = error["details"][0]
        loc = ".".join(str(p) for p in first["loc"])
        message = f"{message}: {loc}: {first['msg']}" if loc else f"{message}: {first['msg']}"
    return status, f"action-exit {command}: error: {message}"
