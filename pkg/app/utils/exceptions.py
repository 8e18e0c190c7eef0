"""
bprx exception hierarchy.

Every error carries a stable ``error_code`` so command output and logs can be
grepped the same way regardless of where the failure started.
"""
from typing import Any


class BprxError(Exception):
    """Base class for every error raised by the toolkit."""

    error_code = "BPRX_ERROR"

    def __init__(self, message: str = "", **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self) -> str:
        return self.message or self.error_code


# ---- configuration ---------------------------------------------------------

class ConfigError(BprxError):
    error_code = "CONFIG_ERROR"


class UnknownDomainError(ConfigError):
    error_code = "UNKNOWN_DOMAIN"


class MissingLibraryError(ConfigError):
    error_code = "MISSING_LIBRARY"


# ---- belief / library ------------------------------------------------------

class EmptyLibraryError(BprxError):
    error_code = "EMPTY_LIBRARY"


class InvalidBeliefError(BprxError):
    error_code = "INVALID_BELIEF"


class DuplicateTaskError(BprxError):
    error_code = "DUPLICATE_TASK"


class LayoutMismatchError(BprxError):
    error_code = "LAYOUT_MISMATCH"


class DimensionMismatchError(BprxError):
    error_code = "DIMENSION_MISMATCH"


# ---- dynamics models -------------------------------------------------------

class IllConditionedKernelError(BprxError):
    error_code = "ILL_CONDITIONED_KERNEL"


class TrainingDivergedError(BprxError):
    error_code = "TRAINING_DIVERGED"


class InvalidVarianceError(BprxError):
    error_code = "INVALID_VARIANCE"


class ModelFormatError(BprxError):
    error_code = "MODEL_FORMAT"


class ModelVersionError(ModelFormatError):
    error_code = "MODEL_VERSION"


class UnsupportedModelError(ModelFormatError):
    error_code = "UNSUPPORTED_MODEL"


# ---- environments / learners -----------------------------------------------

class InvalidActionError(BprxError):
    error_code = "INVALID_ACTION"


class LearnerFailedError(BprxError):
    """Learner ran out of budget; ``best_policy`` holds the best found so far."""

    error_code = "LEARNER_FAILED"

    def __init__(self, message: str = "", best_policy=None, best_return=None, **context: Any):
        super().__init__(message, **context)
        self.best_policy = best_policy
        self.best_return = best_return


# ---- results ---------------------------------------------------------------

class NoDataError(BprxError):
    error_code = "NO_DATA"


class MalformedResultsError(BprxError):
    error_code = "MALFORMED_RESULTS"


class DegenerateUpdateWarning(RuntimeWarning):
    """All posterior mass underflowed; the prior was kept."""
