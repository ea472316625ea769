"""Exception types shared across the toolkit."""

from __future__ import annotations


class ForgeError(Exception):
    """Base class for all toolkit errors."""


class DataError(ForgeError):
    """Malformed or internally inconsistent data (score files, manifests, ...)."""


class MissingDomainError(ForgeError):
    """A quota'd domain has no sentences to sample from."""


class TransportError(ForgeError):
    """A remote provider call failed."""

    def __init__(self, message: str, example_ids: tuple[str, ...] = ()) -> None:
        super().__init__(message)
        self.example_ids = example_ids


class PartialRunError(ForgeError):
    """A pipeline run stopped early; carries a cursor for resumption."""

    def __init__(self, message: str, cursor: int, partial: object = None) -> None:
        super().__init__(message)
        self.cursor = cursor
        self.partial = partial


class ValidationError(ForgeError):
    """Plan or interchange-file constraints were violated."""

    def __init__(self, message: str, violations: tuple[str, ...] = ()) -> None:
        super().__init__(message)
        self.violations = violations or (message,)


class ReportError(ForgeError):
    """Report emission could not satisfy its preconditions."""
