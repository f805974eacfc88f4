"""Exception hierarchy shared by the certification library and CLI."""

from __future__ import annotations

from pathlib import Path


class CertError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(CertError, ValueError):
    """Raised when a caller passes an unsupported or inconsistent parameter."""


class ShapeError(CertError, ValueError):
    """Raised when array dimensions do not agree."""

    def __init__(self, message: str, layer: int | None = None) -> None:
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


class ModelFileError(CertError):
    """Base class for failures while reading a model or input document."""

    def __init__(self, message: str, path: Path | str | None = None, layer: int | None = None) -> None:
        parts = []
        if path is not None:
            parts.append(str(path))
        if layer is not None:
            parts.append(f"layer {layer}")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.path = Path(path) if path is not None else None
        self.layer = layer


class ModelParseError(ModelFileError):
    """The document is not valid JSON text."""


class SchemaError(ModelFileError):
    """The document parsed but does not follow the expected schema."""


class DimensionMismatchError(ModelFileError):
    """Consecutive layers of a model document do not chain."""


class InvariantViolationError(CertError):
    """Raised when pre-activation bounds are inconsistent (l > u)."""

    def __init__(self, message: str, layer: int | None = None, neuron: int | None = None) -> None:
        super().__init__(message)
        self.layer = layer
        self.neuron = neuron


class InvalidStateError(CertError):
    """Raised when prior layer bounds do not cover the requested layer."""


class NumericError(CertError, ArithmeticError):
    """Raised when a bound computation produces a non-finite value."""

    def __init__(self, message: str, layer: int | None = None) -> None:
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)
        self.layer = layer


class CapacityError(CertError):
    """Raised when an exhaustive oracle would exceed its enumeration limit."""

    def __init__(self, requested: int, limit: int) -> None:
        super().__init__(f"{requested} uncertain neurons exceed the enumeration limit of {limit}")
        self.requested = requested
        self.limit = limit
