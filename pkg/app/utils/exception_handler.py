import logging
from typing import Any, Mapping, Optional, Tuple

from rest_framework.exceptions import ValidationError
from rest_framework.serializers import ValidationError as SerializerValidationError

from app.utils.exceptions import BprxError, ConfigError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_RUNTIME_FAILURE = 2


def format_validation_error(error_detail) -> str:
    """
    Convert DRF ValidationError detail into a readable error message.

    Handles:
    - Dict format: {'episodes': [ErrorDetail(...)]} -> "Episodes: Ensure this value is greater than or equal to 1."
    - Nested dicts: {'kernel': {'l': [...]}} -> "Kernel.L: ..."
    - List format: [ErrorDetail(...)] -> "..."
    - String format: "error message" -> "error message"
    """
    if isinstance(error_detail, dict):
        messages = []
        for field, errors in error_detail.items():
            field_name = str(field).replace('_', ' ').title()
            if isinstance(errors, dict):
                nested = format_validation_error(errors)
                messages.append(f"{field_name}.{nested}")
                continue
            error_strings = []
            for error in errors if isinstance(errors, list) else [errors]:
                if isinstance(error, (dict, list)):
                    error_strings.append(format_validation_error(error))
                elif hasattr(error, 'string'):
                    error_strings.append(error.string)
                else:
                    error_strings.append(str(error))
            messages.append(f"{field_name}: {', '.join(s for s in error_strings if s)}")
        return ". ".join(messages)

    elif isinstance(error_detail, list):
        messages = []
        for error in error_detail:
            if isinstance(error, (dict, list)):
                nested = format_validation_error(error)
                if nested:
                    messages.append(nested)
            elif hasattr(error, 'string'):
                messages.append(error.string)
            else:
                messages.append(str(error))
        return ". ".join(messages)

    elif isinstance(error_detail, str):
        return error_detail

    else:
        return str(error_detail)


def command_exception_handler(exc: BaseException, context: Optional[Mapping[str, Any]] = None) -> Tuple[int, str]:
    """
    Central exception handler for management commands.
    Maps any exception to (exit code, one-line message).
    """
    context = context or {}
    command = context.get('command', 'UnknownCommand')
    logger.error(f"[{command}] Exception: {exc}")

    # --- Schema validation (experiment files, model files) ---
    if isinstance(exc, (ValidationError, SerializerValidationError)):
        return EXIT_CONFIG_ERROR, f"CONFIG_ERROR: {format_validation_error(exc.detail)}"

    # --- Configuration problems ---
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG_ERROR, f"{exc.error_code}: {exc}"

    # --- Known runtime failures ---
    if isinstance(exc, BprxError):
        return EXIT_RUNTIME_FAILURE, f"{exc.error_code}: {exc}"

    # --- Unexpected failures ---
    logger.exception("Unhandled Exception", exc_info=exc)
    return EXIT_RUNTIME_FAILURE, f"INTERNAL_ERROR: {type(exc).__name__}: {exc}"
