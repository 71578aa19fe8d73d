"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Half-open character range ``[start, end)`` into a query text."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ValueError(f"span start {self.start} after end {self.end}")


class LambdaqError(Exception):
    """Base class. ``span`` and ``line`` locate the problem when known."""

    def __init__(self, message: str, *, span: SourceSpan | None = None, line: int | None = None):
        super().__init__(message)
        self.message = message
        self.span = span
        self.line = line

    def __str__(self) -> str:
        where = ""
        if self.line is not None:
            where = f"line {self.line}: "
        elif self.span is not None:
            where = f"at {self.span.start}-{self.span.end}: "
        return f"{type(self).__name__}: {where}{self.message}"


# -- types and schema -------------------------------------------------------

class TypeSyntaxError(LambdaqError):
    pass


class UnknownBase(LambdaqError):
    pass


class SchemaError(LambdaqError):
    pass


class DuplicateName(SchemaError):
    pass


class NoShapeMatch(SchemaError):
    pass


class SourceShapeMismatch(SchemaError):
    pass


class UnknownName(SchemaError):
    pass


class MediationError(SchemaError):
    pass


# -- stores -----------------------------------------------------------------

class StoreError(LambdaqError):
    pass


class UnknownAttribute(StoreError):
    pass


class UnknownEntityType(StoreError):
    pass


class HeaderMismatch(StoreError):
    pass


class ShapeError(StoreError):
    """An attribute was used through an access path its shape does not offer."""


# -- terms, parsing, typing ---------------------------------------------------

class TermError(LambdaqError):
    pass


class ParseError(LambdaqError):
    pass


class ElisionAmbiguity(ParseError):
    pass


class TypeCheckError(LambdaqError):
    pass


class TypeMismatch(TypeCheckError, StoreError):
    """Raised by the type checker and by loaders for ill-typed data."""


class ArityMismatch(TypeCheckError):
    pass


class UnknownVariable(TypeCheckError):
    pass


class ComponentOutOfRange(TypeCheckError):
    pass


class NonBoolQuantifierBody(TypeCheckError):
    pass


class NotClosed(TypeCheckError):
    pass


class NotLambda(TypeCheckError):
    pass


class BodyNotBool(TypeCheckError):
    pass


# -- evaluation and translation ----------------------------------------------

class UnsafeQuery(LambdaqError):
    pass


class DomainTooLarge(LambdaqError):
    pass


class UnsupportedConstruct(LambdaqError):
    pass


class NotPartitionable(UnsupportedConstruct):
    pass


class SessionError(LambdaqError):
    pass
