import pytest

from lambdaq.core import parse_type
from lambdaq.errors import DuplicateName, MediationError, SourceShapeMismatch, UnknownBase, UnknownName
from lambdaq.fixtures import fixture_text, install_film_rename
from lambdaq.schema import Schema, classify_attribute, load_mediation_text, load_schema_text, render_schema

BASES = """
entity User
entity Movie
descriptive Stars: Number
descriptive Title: String
descriptive Released: Number
descriptive Director: String
descriptive Genre: String
"""


@pytest.mark.parametrize(
    "attr, shape",
    [
        ("Movie", "node_props"),
        ("FOF", "edge_plain_multi"),
        ("Rates", "edge_multi"),
        ("Submittes_to", "edge_single"),
        ("Actors", "relation"),
        ("Movies", "relation"),
    ],
)
def test_fixture_shapes(schema, attr, shape):
    assert schema.attribute(attr).shape == shape
    assert classify_attribute(schema.attribute(attr).type, schema) == shape


def test_declare_attribute_checks_source_against_shape():
    s = load_schema_text(BASES)
    assert s.declare_attribute("FOF", parse_type("((Bool: User): User)"), "graph").shape == "edge_plain_multi"
    rel = s.declare_attribute("Movies", parse_type("(Bool:Title, Released, Director, Genre)"), "relational")
    assert rel.shape == "relation"
    with pytest.raises(SourceShapeMismatch):
        s.declare_attribute("Bad", parse_type("(Bool:Title, Released)"), "graph")


def test_fixture_schema_counts(schema):
    decls = schema.attributes.values()
    assert sum(d.source == "graph" for d in decls) == 6
    assert sum(d.source == "relational" for d in decls) == 2


def test_empty_text_gives_empty_schema():
    s = load_schema_text("")
    assert s.attributes == {}


def test_duplicate_attribute_reports_second_line():
    text = BASES.strip() + "\nRates/((Bool: Stars, Movie): User)\nRates/((Bool: Stars, Movie): User)\n"
    with pytest.raises(DuplicateName) as err:
        load_schema_text(text)
    assert err.value.line == len(BASES.strip().splitlines()) + 2


def test_undeclared_base_is_an_error():
    with pytest.raises(UnknownBase) as err:
        load_schema_text("entity User\nFOF/((Bool: Person): User)")
    assert err.value.line == 2


def test_schema_render_round_trip(schema):
    text = render_schema(schema)
    again = load_schema_text(text)
    assert render_schema(again) == text
    assert again.attributes == schema.attributes


def test_name_resolution_and_rename(schema):
    assert schema.resolve_name("Movies").shape == "relation"
    with pytest.raises(UnknownName):
        schema.resolve_name("Film")
    install_film_rename(schema)
    assert schema.resolve_name("Film").name == "Movies"
    with pytest.raises(UnknownName):
        schema.resolve_name("Moviez")


def test_alias_requires_descriptive_types_with_same_carrier():
    s = load_schema_text(BASES + "descriptive Title_g: String\ndescriptive Year: Number\n")
    load_mediation_text("alias Title ~ Title_g", s)
    assert s.alias_class("Title") == {"Title", "Title_g"}
    assert s.comparable(parse_type("Title"), parse_type("Title_g"))
    with pytest.raises(MediationError):
        load_mediation_text("alias Title ~ Year", s)
    with pytest.raises(MediationError):
        load_mediation_text("alias User ~ Movie", s)


def test_rename_must_be_injective(schema):
    install_film_rename(schema)
    with pytest.raises(MediationError):
        load_mediation_text("rename Flick -> Movies", schema)
    with pytest.raises(DuplicateName):
        load_mediation_text("rename Film -> Actors", schema)
    with pytest.raises(UnknownName):
        load_mediation_text("rename Pics -> Pictures", schema)


def test_fixture_files_are_bundled():
    assert "Rates" in fixture_text("movies-small", "schema.txt")
    assert isinstance(Schema(), Schema)
