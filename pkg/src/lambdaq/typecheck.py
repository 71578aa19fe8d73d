"""Type assignment for terms and validation of query form."""

from __future__ import annotations

from dataclasses import dataclass

from .core import BOOL, NUMBER, Base, Func, TupleT, TypeExpr, render_type, validate_value
from .errors import (
    ArityMismatch,
    BodyNotBool,
    ComponentOutOfRange,
    NonBoolQuantifierBody,
    NotClosed,
    NotLambda,
    TypeMismatch,
    UnknownAttribute,
    UnknownVariable,
)
from .schema import Schema
from .terms import (
    And,
    App,
    Arith,
    AttrRef,
    Compare,
    Component,
    Const,
    Count,
    Exists,
    Forall,
    Implies,
    Lambda,
    Not,
    Or,
    Term,
    TupleCons,
    Var,
    free_vars,
    well_formed,
)

ORDERED_CARRIERS = ("String", "Number", "Date")


class TypeEnv:
    """Binder frames; lookup resolves to the innermost binding."""

    def __init__(self, frames: tuple[dict[str, TypeExpr], ...] = ()):
        self.frames = frames

    def extend(self, bindings: dict[str, TypeExpr]) -> TypeEnv:
        return TypeEnv(self.frames + (bindings,))

    def lookup(self, name: str) -> TypeExpr | None:
        for frame in reversed(self.frames):
            if name in frame:
                return frame[name]
        return None


@dataclass(frozen=True)
class QuerySignature:
    columns: tuple[tuple[str, Base], ...]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.columns)

    @property
    def types(self) -> tuple[Base, ...]:
        return tuple(t for _, t in self.columns)


def _show(t: TypeExpr) -> str:
    return render_type(t)


def infer_type(t: Term, env: TypeEnv, schema: Schema) -> TypeExpr:
    if isinstance(t, Var):
        bound = env.lookup(t.name)
        if bound is None:
            raise UnknownVariable(f"unknown variable {t.name!r}", span=t.span)
        if t.type is not None and t.type != bound:
            raise TypeMismatch(f"{t.name} is bound as {_show(bound)} but used as {_show(t.type)}", span=t.span)
        return bound
    if isinstance(t, Const):
        if t.type is None:
            raise TypeMismatch(f"constant {t.value!r} has no type", span=t.span)
        if not validate_value(t.value, t.type, schema):
            raise TypeMismatch(f"constant {t.value!r} is not a {_show(t.type)}", span=t.span)
        return t.type
    if isinstance(t, AttrRef):
        decl = schema.attributes.get(t.name)
        if decl is None:
            raise UnknownAttribute(f"unknown attribute {t.name!r}", span=t.span)
        return decl.type
    if isinstance(t, App):
        ft = infer_type(t.fn, env, schema)
        ats = [infer_type(a, env, schema) for a in t.args]
        if isinstance(ft, Func):
            if len(ats) != len(ft.args):
                raise ArityMismatch(f"function of type {_show(ft)} applied to {len(ats)} arguments", span=t.span)
            for a, want, got in zip(t.args, ft.args, ats):
                if want != got:
                    raise TypeMismatch(f"argument of type {_show(got)} where {_show(want)} is expected", span=a.span or t.span)
            return ft.result
        if isinstance(ft, TupleT):
            # tuple-match: componentwise equality with the arguments
            if len(ats) != len(ft.components):
                raise ArityMismatch(f"tuple of type {_show(ft)} matched against {len(ats)} arguments", span=t.span)
            for a, want, got in zip(t.args, ft.components, ats):
                if not schema.comparable(want, got):
                    raise TypeMismatch(f"component {_show(want)} matched against {_show(got)}", span=a.span or t.span)
            return BOOL
        raise TypeMismatch(f"a term of type {_show(ft)} cannot be applied", span=t.span)
    if isinstance(t, Lambda):
        for p in t.params:
            if p.type is None:
                raise TypeMismatch(f"lambda parameter {p.name} has no type", span=p.span or t.span)
        inner = env.extend({p.name: p.type for p in t.params})
        return Func(infer_type(t.body, inner, schema), tuple(p.type for p in t.params))
    if isinstance(t, TupleCons):
        return TupleT(tuple(infer_type(i, env, schema) for i in t.items))
    if isinstance(t, Component):
        tt = infer_type(t.tuple, env, schema)
        if not isinstance(tt, TupleT):
            raise TypeMismatch(f"component of a non-tuple term of type {_show(tt)}", span=t.span)
        if not 1 <= t.index <= len(tt.components):
            raise ComponentOutOfRange(f"component {t.index} of a {len(tt.components)}-tuple", span=t.span)
        return tt.components[t.index - 1]
    if isinstance(t, (Not, And, Or, Implies)):
        for c in t.children():
            ct = infer_type(c, env, schema)
            if ct != BOOL:
                raise TypeMismatch(f"connective operand of type {_show(ct)}, expected Bool", span=c.span or t.span)
        return BOOL
    if isinstance(t, (Exists, Forall)):
        v = t.var
        if not isinstance(v.type, Base) or v.type.name not in schema.bases:
            raise TypeMismatch(f"quantified variable {v.name} needs a base type", span=v.span or t.span)
        bt = infer_type(t.body, env.extend({v.name: v.type}), schema)
        if bt != BOOL:
            raise NonBoolQuantifierBody(f"quantifier body has type {_show(bt)}", span=t.span)
        return BOOL
    if isinstance(t, Count):
        st = infer_type(t.set_term, env, schema)
        want = Func(BOOL, (t.elem,))
        if st != want:
            raise TypeMismatch(f"COUNT_{t.elem.name} needs a {_show(want)} set, got {_show(st)}", span=t.span)
        return NUMBER
    if isinstance(t, Compare):
        lt = infer_type(t.lhs, env, schema)
        rt = infer_type(t.rhs, env, schema)
        if t.op == "=":
            if not schema.comparable(lt, rt):
                raise TypeMismatch(f"cannot compare {_show(lt)} with {_show(rt)}", span=t.span)
        else:
            if lt != rt or schema.carrier(lt) not in ORDERED_CARRIERS:
                raise TypeMismatch(f"cannot order {_show(lt)} against {_show(rt)}", span=t.span)
        return BOOL
    if isinstance(t, Arith):
        lt = infer_type(t.lhs, env, schema)
        rt = infer_type(t.rhs, env, schema)
        if lt != rt or schema.carrier(lt) != "Number":
            raise TypeMismatch(f"arithmetic on {_show(lt)} and {_show(rt)}", span=t.span)
        return lt
    raise TypeMismatch(f"unknown term {t!r}")


def check_query(t: Term, schema: Schema) -> QuerySignature:
    well_formed(t)
    fv = free_vars(t)
    if fv:
        raise NotClosed(f"query has free variables: {', '.join(sorted(fv))}", span=t.span)
    if not isinstance(t, Lambda):
        raise NotLambda("a query must be a lambda abstraction", span=t.span)
    for p in t.params:
        if not isinstance(p.type, Base):
            raise TypeMismatch(f"output variable {p.name} needs a base type", span=p.span or t.span)
    ft = infer_type(t, TypeEnv(), schema)
    if ft.result != BOOL:
        raise BodyNotBool(f"query body has type {_show(ft.result)}", span=t.body.span or t.span)
    return QuerySignature(tuple((p.name, p.type) for p in t.params))
