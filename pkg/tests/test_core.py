import datetime
from decimal import Decimal

import pytest

from lambdaq.core import UNDEF, Base, EntityId, Func, TupleT, format_value, parse_type, render_type, type_equal, validate_value
from lambdaq.errors import TypeSyntaxError

BOOL = Base("Bool")


def test_type_equality_is_structural():
    assert type_equal(Base("User"), Base("User"))
    assert not type_equal(Func(BOOL, (Base("User"),)), Func(BOOL, (Base("Movie"),)))
    built = Func(Func(BOOL, (Base("Stars"), Base("Movie"))), (Base("User"),))
    assert type_equal(parse_type("((Bool: Stars, Movie): User)"), built)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("(Bool:Title, Released, Director, Genre)", Func(BOOL, tuple(Base(n) for n in ("Title", "Released", "Director", "Genre")))),
        ("((Title, Director, Released): Movie)", Func(TupleT((Base("Title"), Base("Director"), Base("Released"))), (Base("Movie"),))),
        ("(User: Movie)", Func(Base("User"), (Base("Movie"),))),
    ],
)
def test_parse_type(text, expected):
    assert parse_type(text) == expected


@pytest.mark.parametrize("bad", ["(:User)", "(Bool:)", "((Bool: User): User", "", "(Bool User)"])
def test_malformed_types_are_rejected(bad):
    with pytest.raises(TypeSyntaxError):
        parse_type(bad)


def test_unknown_base_names_are_rejected_when_bases_given():
    with pytest.raises(Exception):
        parse_type("(Bool: Nope)", bases={"Bool", "User"})


@pytest.mark.parametrize(
    "t, text",
    [
        (Func(BOOL, (Base("User"),)), "(Bool: User)"),
        (Func(Func(BOOL, (Base("User"),)), (Base("User"),)), "((Bool: User): User)"),
    ],
)
def test_render_type(t, text):
    assert render_type(t) == text


@pytest.mark.parametrize(
    "line",
    [
        "((Title, Director, Released): Movie)",
        "((U_ID, Name, Birth_y): User)",
        "((Address, Publisher): Journal)",
        "((Bool: User): User)",
        "((Bool: Stars, Movie): User)",
        "((Date, Journal): User)",
    ],
)
def test_graph_declarations_round_trip(line):
    assert render_type(parse_type(line)) == line
    assert parse_type(render_type(parse_type(line))) == parse_type(line)


def test_value_inhabitation(schema):
    assert validate_value(1975, Base("Released"), schema)
    assert not validate_value(EntityId("User", "u1"), Base("Movie"), schema)
    stars_movie = Func(BOOL, (Base("Stars"), Base("Movie")))
    assert validate_value(frozenset({(5, EntityId("Movie", "m1"))}), stars_movie, schema)
    assert not validate_value(frozenset({("five", EntityId("Movie", "m1"))}), stars_movie, schema)
    assert validate_value(datetime.date(2020, 1, 1), Base("Date"), schema)
    assert validate_value(Decimal("2.5"), Base("Stars"), schema)


def test_undef_is_a_falsy_singleton():
    assert not UNDEF
    assert UNDEF is type(UNDEF)()
    assert repr(UNDEF) == "UNDEF"


def test_format_value():
    assert format_value(EntityId("User", "u1")) == "u1"
    assert format_value(datetime.date(2020, 1, 1)) == "2020-01-01"
    assert format_value(3) == "3"
    assert format_value(True) in ("true", "TRUE", "True")
