from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ErrorReport(BaseModel):
    """
    Error model used by config validation and output checks.

    Steps append messages as they find problems; the caller raises once
    with the full list so the user sees every issue at the same time.
    """
    errors: List[str] = Field(default_factory=list)

    def is_empty(self) -> bool:
        return len(self.errors) == 0

    def add(self, message: str, line: Optional[int] = None, field: Optional[str] = None) -> None:
        prefix = f"{field}: " if field else ""
        location = f" (line {line})" if line else ""
        self.errors.append(f"{prefix}{message}{location}")


class ConfigurationError(ValueError):
    """Invalid circuit, dataset or run configuration."""


class ConfigValidationException(ConfigurationError):
    """
    Raised when a run configuration fails validation.

    Carries the full ErrorReport for line/field diagnostics on the CLI.
    """
    def __init__(self, errors: ErrorReport):
        self.errors = errors
        super().__init__("; ".join(errors.errors))


class OutputValidationException(Exception):
    """Produced tables failed the final sanity checks (NaN, wrong shape)."""
    def __init__(self, errors: ErrorReport):
        self.errors = errors
        super().__init__("; ".join(errors.errors))


class ShapeError(ValueError):
    pass


class QubitIndexError(IndexError):
    pass


class NumericError(ArithmeticError):
    pass


class ConvergenceError(NumericError):
    """Iterative solver gave up. `diagnostics` holds the last residual state."""
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class TrainingAborted(NumericError):
    """Training hit a numeric failure; `log` is the partial record, flagged incomplete."""
    def __init__(self, message: str, log: Any):
        self.log = log
        super().__init__(message)


class UnsupportedError(ValueError):
    pass


class DegenerateDataError(ValueError):
    pass


class DomainError(ValueError):
    pass


class SpectralDivisionError(ZeroDivisionError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        location = f" (line {line})" if line else ""
        super().__init__(f"{message}{location}")
