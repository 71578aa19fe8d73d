import pytest

from lambdaq.core import Base
from lambdaq.errors import TermError
from lambdaq.terms import (
    App,
    AttrRef,
    Component,
    Const,
    Exists,
    Lambda,
    Var,
    alpha_equal,
    attr_refs,
    free_vars,
    rename_free,
    substitute,
    well_formed,
)
from queries import TITLES_RAW, DIVISION_RAW

T, M, R = Var("t", Base("Title")), Var("m", Base("Movie")), Var("r", Base("Released"))


def titles_body(m=M, r=R, t=T):
    atom = App(App(AttrRef("Movie"), (m,)), (t, Const("Spielberg", Base("Director")), r))
    return Exists(m, Exists(r, atom))


def test_free_variables(q):
    assert free_vars(q(TITLES_RAW)) == set()
    assert free_vars(q(TITLES_RAW).body) == {"t"}
    assert free_vars(Var("x")) == {"x"}


def test_alpha_equality_renames_bound_names():
    s = Var("s", Base("Title"))
    assert alpha_equal(Lambda((T,), titles_body()), Lambda((s,), titles_body(t=s)))


def test_alpha_equality_ignores_binder_order_in_a_block():
    m, r = M, R
    atom = App(App(AttrRef("Movie"), (m,)), (T, Const("Spielberg", Base("Director")), r))
    swapped = Lambda((T,), Exists(r, Exists(m, atom)))
    assert alpha_equal(Lambda((T,), titles_body()), swapped)


def test_alpha_equality_distinguishes_queries(q):
    assert not alpha_equal(q(TITLES_RAW), q(DIVISION_RAW))
    assert not alpha_equal(Lambda((T,), titles_body()), Lambda((T,), Exists(M, titles_body())))


def test_shadowing_is_allowed():
    inner = Lambda((T,), Var("t", Base("Title")))
    assert well_formed(Lambda((T,), App(inner, (T,))))


def test_duplicate_parameters_are_rejected():
    with pytest.raises(TermError):
        well_formed(Lambda((T, T), Const(True, Base("Bool"))))


def test_component_index_starts_at_one():
    with pytest.raises(TermError):
        well_formed(Component(Var("x"), 0))
    assert well_formed(Component(Var("x"), 1))


def test_substitution_avoids_capture():
    # (exists m P(m, x))[x := m'] must not capture the free m
    body = Exists(M, App(AttrRef("F"), (M, Var("x", Base("Movie")))))
    out = substitute(body, "x", Var("m", Base("Movie")))
    assert free_vars(out) == {"m"}
    assert out.var.name != "m"


def test_rename_free_leaves_bound_occurrences():
    term = App(AttrRef("F"), (T, Lambda((T,), T)))
    out = rename_free(term, {"t": "u"})
    assert out.args[0].name == "u"
    assert out.args[1].body.name == "t"


def test_attr_refs_counts_occurrences(q):
    assert attr_refs(q(DIVISION_RAW)) == {"Movies": 1, "Actors": 1}
