import pytest

from lambdaq.core import Base, Func, TupleT
from lambdaq.errors import ArityMismatch, BodyNotBool, ComponentOutOfRange, NotClosed, NotLambda, TypeMismatch
from lambdaq.terms import App, AttrRef, Component, Const, Lambda, Var
from lambdaq.typecheck import TypeEnv, check_query, infer_type
from queries import COUNT_FRIENDLY, TITLES_FRIENDLY, TITLES_RAW, DIVISION_FRIENDLY, DIVISION_RAW

BOOL = Base("Bool")


def test_rated_movies_is_a_function_of_users(q, schema):
    t = q("lambda u^User (lambda m^Movie (exists s^Stars Rates(u)(s, m)))")
    assert infer_type(t, TypeEnv(), schema) == Func(Func(BOOL, (Base("Movie"),)), (Base("User"),))


def test_titles_has_a_title_set_type(q, schema):
    assert infer_type(q(TITLES_RAW), TypeEnv(), schema) == Func(BOOL, (Base("Title"),))


def test_tuple_match_arity(schema):
    m = Var("m", Base("Movie"))
    bad = App(App(AttrRef("Movie"), (m,)), (Var("t", Base("Title")), Const("Spielberg", Base("Director"))))
    env = TypeEnv().extend({"m": Base("Movie"), "t": Base("Title")})
    with pytest.raises(ArityMismatch):
        infer_type(bad, env, schema)


def test_signatures(q, schema):
    assert check_query(q(DIVISION_RAW), schema).columns == (("n", Base("Name")),)
    sig = check_query(q(COUNT_FRIENDLY, "friendly"), schema)
    assert sig.columns == (("u", Base("User")), ("g", Base("Genre")), ("n", Base("Number")))


@pytest.mark.parametrize("text, syntax", [(TITLES_RAW, "raw"), (DIVISION_RAW, "raw"), (TITLES_FRIENDLY, "friendly"), (DIVISION_FRIENDLY, "friendly"), (COUNT_FRIENDLY, "friendly")])
def test_every_reference_query_checks(q, schema, text, syntax):
    check_query(q(text, syntax), schema)


def test_free_variable_is_not_closed(schema):
    u, v = Var("u", Base("User")), Var("v", Base("User"))
    open_query = Lambda((v,), App(App(AttrRef("FOF"), (u,)), (v,)))
    with pytest.raises(NotClosed):
        check_query(open_query, schema)


def test_query_must_be_a_lambda_with_bool_body(schema):
    with pytest.raises(NotLambda):
        check_query(Const(True, BOOL), schema)
    with pytest.raises(BodyNotBool):
        check_query(Lambda((Var("m", Base("Movie")),), App(AttrRef("Movie"), (Var("m", Base("Movie")),))), schema)


def test_component_out_of_range(schema):
    m = Var("m", Base("Movie"))
    env = TypeEnv().extend({"m": Base("Movie")})
    assert infer_type(Component(App(AttrRef("Movie"), (m,)), 3), env, schema) == Base("Released")
    with pytest.raises(ComponentOutOfRange):
        infer_type(Component(App(AttrRef("Movie"), (m,)), 4), env, schema)


def test_mismatched_argument_type(schema):
    u = Var("u", Base("User"))
    env = TypeEnv().extend({"u": Base("User")})
    with pytest.raises(TypeMismatch):
        infer_type(App(AttrRef("Movie"), (u,)), env, schema)


def test_tuple_type_of_props(schema):
    m = Var("m", Base("Movie"))
    env = TypeEnv().extend({"m": Base("Movie")})
    got = infer_type(App(AttrRef("Movie"), (m,)), env, schema)
    assert got == TupleT((Base("Title"), Base("Director"), Base("Released")))
