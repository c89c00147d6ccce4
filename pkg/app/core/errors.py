"""
Error hierarchy for qmc-tree.

Every failure raised by the library derives from QMCTreeError and carries a
machine-readable code plus a details dict, so the CLI can turn any of them
into a structured JSON error without special-casing.
"""

from typing import Any, Dict


class QMCTreeError(Exception):
    """Base class for all library errors."""

    code = "qmc_tree_error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": self.code,
            "message": str(self),
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return str(value)


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Operator algebra
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

class NotPSD(QMCTreeError):
    code = "not_psd"


class DimensionMismatch(QMCTreeError):
    code = "dimension_mismatch"


class BadPhase(QMCTreeError):
    code = "bad_phase"


class NotAProjection(QMCTreeError):
    code = "not_a_projection"


class InvalidParameter(QMCTreeError):
    code = "invalid_parameter"


class SizeOverflow(QMCTreeError):
    code = "size_overflow"


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Walk / chain
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

class UnknownLabel(QMCTreeError):
    code = "unknown_label"


class ZeroWeightState(QMCTreeError):
    code = "zero_weight_state"


class BadState(QMCTreeError):
    code = "bad_state"


class WalkValidationError(QMCTreeError):
    code = "walk_validation_failed"


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Recurrence
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

class DegenerateProjection(QMCTreeError):
    code = "degenerate_projection"


class ZeroProjection(QMCTreeError):
    code = "zero_projection"


class AssertionMismatch(QMCTreeError):
    code = "assertion_mismatch"


# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━
# Command line
# ━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

class UsageError(QMCTreeError):
    code = "usage_error"
