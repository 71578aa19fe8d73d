"""Type universe and runtime values.

Types are built from named bases with two constructors: a functional type
``(S: R1, ..., Rn)`` for (partial) functions from ``R1 x ... x Rn`` into
``S``, and a tuple type ``(R1, ..., Rn)`` for the cartesian product.  All
type objects are frozen dataclasses, so structural equality is ``==``.

Values are plain Python objects: ``str``, ``int``/``Decimal`` for numbers,
``bool``, ``datetime.date``, ``tuple`` for tuple values, ``frozenset`` for
finite sets, :class:`EntityId` for nodes and :data:`UNDEF` for the result
of a partial function outside its domain.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import TYPE_CHECKING, Collection, Union

from .errors import TypeSyntaxError, UnknownBase

if TYPE_CHECKING:
    from .schema import Schema

CARRIERS = ("String", "Number", "Bool", "Date")


@dataclass(frozen=True)
class BaseType:
    name: str
    kind: str  # "entity" | "descriptive"
    carrier: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("entity", "descriptive"):
            raise ValueError(f"bad base kind {self.kind!r}")
        if self.kind == "entity" and self.carrier is not None:
            raise ValueError(f"entity type {self.name} cannot have a carrier")
        if self.kind == "descriptive" and self.carrier not in CARRIERS:
            raise ValueError(f"descriptive type {self.name} needs a carrier in {CARRIERS}")

    @property
    def is_entity(self) -> bool:
        return self.kind == "entity"


@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self) -> str:
        return render_type(self)


@dataclass(frozen=True)
class Func:
    result: TypeExpr
    args: tuple[TypeExpr, ...]

    def __post_init__(self) -> None:
        if not self.args:
            raise ValueError("functional type needs at least one argument type")

    def __str__(self) -> str:
        return render_type(self)


@dataclass(frozen=True)
class TupleT:
    components: tuple[TypeExpr, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("tuple type needs at least one component")

    def __str__(self) -> str:
        return render_type(self)


TypeExpr = Union[Base, Func, TupleT]

BOOL = Base("Bool")
NUMBER = Base("Number")


def type_equal(a: TypeExpr, b: TypeExpr) -> bool:
    return a == b


def base_names(t: TypeExpr) -> set[str]:
    if isinstance(t, Base):
        return {t.name}
    if isinstance(t, Func):
        out = base_names(t.result)
        for a in t.args:
            out |= base_names(a)
        return out
    out: set[str] = set()
    for c in t.components:
        out |= base_names(c)
    return out


def render_type(t: TypeExpr) -> str:
    if isinstance(t, Base):
        return t.name
    if isinstance(t, Func):
        return f"({render_type(t.result)}: {', '.join(render_type(a) for a in t.args)})"
    return f"({', '.join(render_type(c) for c in t.components)})"


_TYPE_TOKEN = re.compile(r"\s*(?:([A-Za-z_][A-Za-z0-9_]*)|([():,]))")


def _tokenize_type(text: str) -> list[tuple[str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TYPE_TOKEN.match(text, pos)
        if not m:
            raise TypeSyntaxError(f"unexpected character {text[pos:].lstrip()[:1]!r} in type {text!r}")
        tokens.append((m.group(1) or m.group(2), m.start(1) if m.group(1) else m.start(2)))
        pos = m.end()
    return tokens


def parse_type(text: str, bases: Collection[str] | None = None) -> TypeExpr:
    """Parse ``(S: R1, ..., Rn)`` / ``(R1, ..., Rn)`` / ``Name`` notation.

    When ``bases`` is given every base name must be in it.
    """
    tokens = _tokenize_type(text)
    pos = 0

    def peek() -> str | None:
        return tokens[pos][0] if pos < len(tokens) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise TypeSyntaxError(f"unexpected end of type {text!r}")
        tok = tokens[pos][0]
        if expected is not None and tok != expected:
            raise TypeSyntaxError(f"expected {expected!r} but found {tok!r} in type {text!r}")
        pos += 1
        return tok

    def type_list() -> list[TypeExpr]:
        items = [one()]
        while peek() == ",":
            take(",")
            items.append(one())
        return items

    def one() -> TypeExpr:
        tok = peek()
        if tok is None:
            raise TypeSyntaxError(f"unexpected end of type {text!r}")
        if tok == "(":
            take("(")
            if peek() in (":", ")", ","):
                raise TypeSyntaxError(f"empty argument/result in type {text!r}")
            first = type_list()
            if peek() == ":":
                take(":")
                if len(first) != 1:
                    raise TypeSyntaxError(f"functional type needs exactly one result type in {text!r}")
                if peek() in (")", ",", None):
                    raise TypeSyntaxError(f"empty argument list in type {text!r}")
                args = type_list()
                take(")")
                return Func(first[0], tuple(args))
            take(")")
            return TupleT(tuple(first))
        if tok in (")", ":", ","):
            raise TypeSyntaxError(f"unexpected {tok!r} in type {text!r}")
        take()
        if bases is not None and tok not in bases:
            raise UnknownBase(f"unknown base type {tok!r}")
        return Base(tok)

    if not tokens:
        raise TypeSyntaxError("empty type")
    result = one()
    if pos != len(tokens):
        raise TypeSyntaxError(f"trailing input {tokens[pos][0]!r} in type {text!r}")
    return result


# -- values -----------------------------------------------------------------

@dataclass(frozen=True, order=True)
class EntityId:
    type: str
    id: str

    def __str__(self) -> str:
        return self.id


class _Undef:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNDEF"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (_Undef, ())


UNDEF = _Undef()

Value = object


def carrier_accepts(carrier: str, v: object) -> bool:
    if carrier == "String":
        return isinstance(v, str)
    if carrier == "Number":
        return isinstance(v, (int, Decimal)) and not isinstance(v, bool)
    if carrier == "Bool":
        return isinstance(v, bool)
    if carrier == "Date":
        return isinstance(v, datetime.date) and not isinstance(v, datetime.datetime)
    return False


def validate_value(v: object, t: TypeExpr, schema: Schema) -> bool:
    """True iff ``v`` inhabits ``t``.  Never raises."""
    try:
        return _inhabits(v, t, schema)
    except Exception:
        return False


def _inhabits(v: object, t: TypeExpr, schema: Schema) -> bool:
    if v is UNDEF:
        return False
    if isinstance(t, Base):
        bt = schema.bases.get(t.name)
        if bt is None:
            return False
        if bt.is_entity:
            return isinstance(v, EntityId) and v.type == bt.name
        return carrier_accepts(bt.carrier, v)
    if isinstance(t, TupleT):
        return (
            isinstance(v, tuple)
            and len(v) == len(t.components)
            and all(_inhabits(x, c, schema) for x, c in zip(v, t.components))
        )
    # sets only model characteristic functions
    if t.result != BOOL or not isinstance(v, frozenset):
        return False
    if len(t.args) == 1:
        return all(_inhabits(x, t.args[0], schema) for x in v)
    return all(_inhabits(x, TupleT(t.args), schema) for x in v)


_NUMBER = re.compile(r"^[+-]?\d+(\.\d+)?$")


def parse_number(text: str) -> int | Decimal:
    text = text.strip()
    if not _NUMBER.match(text):
        raise ValueError(f"not a number: {text!r}")
    if "." in text:
        try:
            return Decimal(text)
        except InvalidOperation as exc:  # pragma: no cover - regex guards this
            raise ValueError(str(exc)) from exc
    return int(text)


def parse_scalar(text: str, carrier: str) -> object:
    """Read an unquoted textual value according to ``carrier``."""
    if carrier == "String":
        return text
    if carrier == "Number":
        return parse_number(text)
    if carrier == "Bool":
        low = text.strip().lower()
        if low in ("true", "1"):
            return True
        if low in ("false", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if carrier == "Date":
        return datetime.date.fromisoformat(text.strip())
    raise ValueError(f"unknown carrier {carrier}")


def format_value(v: object) -> str:
    if v is UNDEF:
        return "UNDEF"
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, EntityId):
        return v.id
    if isinstance(v, datetime.date):
        return v.isoformat()
    if isinstance(v, tuple):
        return "(" + ", ".join(format_value(x) for x in v) + ")"
    if isinstance(v, frozenset):
        return "{" + ", ".join(sorted(format_value(x) for x in v)) + "}"
    return str(v)


def sort_key(v: object) -> tuple:
    """Total order over mixed values, used for deterministic output."""
    if isinstance(v, bool):
        return (0, int(v), "")
    if isinstance(v, (int, Decimal)):
        return (1, v, "")
    if isinstance(v, tuple):
        return (5, tuple(sort_key(x) for x in v), "")
    return (2, 0, format_value(v))
