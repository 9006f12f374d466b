# src/core/exceptions.py
"""Custom exceptions and error handling for the benchmark suite."""

from typing import Any


class AppError(Exception):
    """Base application error."""

    def __init__(
        self,
        message: str,
        code: str = "APP_ERROR",
        exit_code: int = 1,
        details: dict[str, Any] | None = None,
    ):
        super().__init__(message)
        self.message = message
        self.code = code
        self.exit_code = exit_code
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": {
                "code": self.code,
                "message": self.message,
                "details": self.details,
            }
        }


class ParameterError(AppError):
    """Invalid argument to a library operation."""

    def __init__(self, message: str, field: str | None = None, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            code="PARAMETER_ERROR",
            details={**({"field": field} if field else {}), **(details or {})},
        )
        self.field = field


class InstanceParseError(AppError):
    """Malformed instance file."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, path: str | None = None):
        details: dict[str, Any] = {}
        if field is not None:
            details["field"] = field
        if line is not None:
            details["line"] = line
        if path is not None:
            details["path"] = path
        super().__init__(message=message, code="INSTANCE_PARSE_ERROR", details=details)
        self.field = field
        self.line = line


class BudgetError(AppError):
    """Problem size beyond an enumeration or simulation budget."""

    def __init__(self, resource: str, requested: int, limit: int):
        super().__init__(
            message=f"{resource} budget exceeded: {requested} > {limit}",
            code="BUDGET_ERROR",
            details={"resource": resource, "requested": requested, "limit": limit},
        )


class DeviceError(AppError):
    """Device model or circuit incompatible with the device."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message=message, code="DEVICE_ERROR", details=details)


class ConfigError(AppError):
    """Bench configuration error."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message=message, code="CONFIG_ERROR", exit_code=1, details=details)


class SolverError(AppError):
    """A solver run failed inside a bench cell."""

    def __init__(self, solver: str, message: str, details: dict[str, Any] | None = None):
        super().__init__(
            message=message,
            code="SOLVER_ERROR",
            exit_code=2,
            details={"solver": solver, **(details or {})},
        )
