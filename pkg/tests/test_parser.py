import pytest

from lambdaq.errors import ElisionAmbiguity, ParseError
from lambdaq.parser import parse_query, render_term
from lambdaq.terms import App, Component, Count, Exists, Forall, Implies, Lambda, alpha_equal, free_vars
from queries import COUNT_FRIENDLY, TITLES_FRIENDLY, TITLES_RAW, DIVISION_FRIENDLY, DIVISION_RAW


def test_titles_shape(q):
    t = q(TITLES_RAW)
    assert isinstance(t, Lambda) and [p.name for p in t.params] == ["t"]
    assert free_vars(t) == set()
    ex = t.body
    assert isinstance(ex, Exists) and isinstance(ex.body, Exists)
    atom = ex.body.body
    assert isinstance(atom, App) and isinstance(atom.fn, App)
    assert atom.fn.fn.name == "Movie"
    assert [a.type.name for a in atom.args] == ["Title", "Director", "Released"]


def test_division_shape(q):
    t = q(DIVISION_RAW)
    assert isinstance(t.body, Forall) and t.body.var.name == "t"
    imp = t.body.body
    assert isinstance(imp, Implies)
    assert isinstance(imp.lhs, Exists) and isinstance(imp.rhs, Exists)


def test_unicode_keywords(q):
    t = q("λt (∃m, r Movie(m)(t, 'Spielberg', r))")
    assert alpha_equal(t, q(TITLES_RAW))


def test_syntax_error_points_at_end(schema):
    text = "lambda t ("
    with pytest.raises(ParseError) as err:
        parse_query(text, schema, "raw")
    assert err.value.span.start == len(text)


def test_friendly_forms_desugar_to_raw(q):
    assert alpha_equal(q(TITLES_FRIENDLY, "friendly"), q(TITLES_RAW))
    assert alpha_equal(q(DIVISION_FRIENDLY, "friendly"), q(DIVISION_RAW))


def test_elision_ambiguity(q):
    with pytest.raises(ElisionAmbiguity):
        q("{x^Title | exists y^Title Movies(x^Title, y^Title)}", "friendly")


@pytest.mark.parametrize("text", [TITLES_RAW, DIVISION_RAW])
def test_render_reparses_alpha_equal(q, text):
    t = q(text)
    assert alpha_equal(q(render_term(t)), t)


def test_count_rendering(q):
    t = q(COUNT_FRIENDLY, "friendly")
    count = t.body.rhs
    assert isinstance(count, Count)
    assert render_term(count).startswith("COUNT_Movie(lambda m^Movie (")
    assert alpha_equal(q(render_term(t)), t)


def test_component_rendering(q):
    t = q("lambda m^Movie (Movie(m)[1] = 'Jaws')")
    comp = t.body.lhs
    assert isinstance(comp, Component) and comp.index == 1
    assert render_term(comp) == "Movie(m)[1]"


def test_dot_selects_unique_component(q):
    dotted = q("{m^Movie | Movie(m^Movie).Title = 'Jaws'^Title}", "friendly")
    indexed = q("lambda m^Movie (Movie(m)[1] = 'Jaws')")
    assert alpha_equal(dotted, indexed)


def test_constant_tags_and_escapes(q):
    t = q("lambda n (exists t, r Actors(n, t, r) and t = 'Bob''s'^Title)")
    assert "'Bob''s'" in render_term(t)
    assert alpha_equal(q(render_term(t)), t)


def test_unknown_attribute(q):
    with pytest.raises(Exception) as err:
        q("lambda x (Nope(x))")
    assert "Nope" in str(err.value)
