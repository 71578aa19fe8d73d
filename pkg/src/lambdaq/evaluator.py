"""Reference evaluation of closed queries over the embedded stores.

The evaluator is a plain nested-loop interpreter: top-level variables are
either enumerated over their active domain or derived from a defining
equality, quantifiers range over active domains, and any atomic predicate
that meets an undefined value is false.  Everything else in the package is
checked against it, so it favours obviousness over speed.
"""

from __future__ import annotations

import itertools
import math
import os
from collections.abc import Iterable
from dataclasses import dataclass

from .core import UNDEF, Base, base_names, format_value, sort_key, validate_value
from .errors import DomainTooLarge, TypeMismatch, UnsafeQuery
from .parser import render_term
from .schema import BOOL_RESULT_SHAPES, Schema
from .store import Stores, domain_index
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
    constants,
    free_vars,
)
from .typecheck import QuerySignature, check_query

DEFAULT_MAX_DOMAIN = 10**7


def max_domain_bound(explicit: int | None = None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("LAMBDAQ_MAX_DOMAIN")
    return int(env) if env else DEFAULT_MAX_DOMAIN


@dataclass(frozen=True)
class Relation:
    signature: QuerySignature
    rows: frozenset

    @property
    def columns(self) -> tuple[str, ...]:
        return self.signature.names

    def sorted_rows(self) -> list[tuple]:
        return sorted(self.rows, key=lambda r: tuple(sort_key(v) for v in r))

    def rendered_rows(self) -> list[tuple[str, ...]]:
        return sorted(tuple(format_value(v) for v in r) for r in self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __contains__(self, row) -> bool:
        return tuple(row) in self.rows

    def __iter__(self):
        return iter(self.sorted_rows())


# -- range restriction ---------------------------------------------------------

@dataclass(frozen=True)
class Binding:
    var: str
    base: Base
    kind: str  # "enumerate" | "derive"
    term: Term | None = None
    conjunct: int | None = None  # index of the defining top-level conjunct

    def __str__(self) -> str:
        if self.kind == "enumerate":
            return f"enumerate {self.var}: {self.base.name}"
        return f"derive {self.var} := {render_term(self.term)}"


@dataclass(frozen=True)
class BindingPlan:
    bindings: tuple[Binding, ...]

    def __iter__(self):
        return iter(self.bindings)

    @property
    def enumerated(self) -> tuple[Binding, ...]:
        return tuple(b for b in self.bindings if b.kind == "enumerate")

    @property
    def derived(self) -> tuple[Binding, ...]:
        return tuple(b for b in self.bindings if b.kind == "derive")


def top_conjuncts(body: Term) -> tuple[Term, ...]:
    return body.args if isinstance(body, And) else (body,)


def enumerable(base: Base, schema: Schema) -> bool:
    """Whether a variable of ``base`` may range over its active domain.

    Entity and declared descriptive bases always may.  The built-in
    ``Number`` base only counts as data when some attribute mentions it.
    """
    if base.name != "Number":
        return True
    return any("Number" in base_names(d.type) for d in schema.attributes.values())


def _definition(conj: Term, var: str) -> Term | None:
    if not isinstance(conj, Compare) or conj.op != "=":
        return None
    for lhs, rhs in ((conj.lhs, conj.rhs), (conj.rhs, conj.lhs)):
        if isinstance(lhs, Var) and lhs.name == var and var not in free_vars(rhs):
            return rhs
    return None


def analyze_range_restriction(t: Term, schema: Schema) -> BindingPlan:
    check_query(t, schema)
    conjuncts = top_conjuncts(t.body)
    bindings = [Binding(p.name, p.type, "enumerate") for p in t.params if enumerable(p.type, schema)]
    bound = {b.var for b in bindings}
    pending = [p for p in t.params if p.name not in bound]
    while pending:
        progress = False
        for p in list(pending):
            for i, c in enumerate(conjuncts):
                rhs = _definition(c, p.name)
                if rhs is not None and free_vars(rhs) <= bound:
                    bindings.append(Binding(p.name, p.type, "derive", rhs, i))
                    bound.add(p.name)
                    pending.remove(p)
                    progress = True
                    break
        if not progress:
            names = ", ".join(f"{p.name}^{p.type.name}" for p in pending)
            raise UnsafeQuery(
                f"output variable {names} is neither enumerable nor defined by an equality", span=t.span
            )
    return BindingPlan(tuple(bindings))


# -- domains ---------------------------------------------------------------------

class Domains:
    """Active domains per base, widened by a query's constants.

    Constants are merged across alias classes so that a value mentioned
    under one name of an aliased pair is visible under the other.
    """

    def __init__(self, stores: Stores, schema: Schema, extra: Iterable[Const] = ()):
        self.stores = stores
        self.schema = schema
        self.index = domain_index(stores, schema)
        self.consts: dict[str, set] = {}
        for c in extra:
            if isinstance(c.type, Base):
                self.consts.setdefault(c.type.name, set()).add(c.value)
        self._cache: dict[str, tuple] = {}

    def of(self, base: Base) -> tuple:
        name = base.name
        got = self._cache.get(name)
        if got is None:
            got = self._cache[name] = tuple(sorted(self._compute(name), key=sort_key))
        return got

    def _compute(self, name: str) -> set:
        if name == "Bool":
            return {False, True}
        bt = self.schema.base(name)
        if bt.is_entity:
            return set(self.stores.graph.entities.get(name, ())) | self.consts.get(name, set())
        out: set = set()
        for member in self.schema.alias_class(name):
            out |= self.index.get(member, set())
            out |= self.consts.get(member, set())
        return out


# -- interpretation ---------------------------------------------------------------

class _Closure:
    __slots__ = ("term", "env", "ev")

    def __init__(self, term: Lambda, env: dict, ev: _Interp):
        self.term, self.env, self.ev = term, env, ev

    def __call__(self, args: tuple):
        env = dict(self.env)
        for p, a in zip(self.term.params, args):
            env[p.name] = a
        return self.ev.value(self.term.body, env)


class _AttrFn:
    """An attribute as a callable partial function."""

    __slots__ = ("decl", "ev")

    def __init__(self, decl, ev: _Interp):
        self.decl, self.ev = decl, ev

    def __call__(self, args: tuple):
        decl, stores, schema = self.decl, self.ev.stores, self.ev.schema
        if decl.shape == "relation":
            if any(a is UNDEF for a in args):
                return False
            return tuple(args) in stores.rel.rows(schema, decl.name)
        (subject,) = args
        if subject is UNDEF:
            return frozenset() if decl.shape in BOOL_RESULT_SHAPES else UNDEF
        if decl.shape in BOOL_RESULT_SHAPES:
            return stores.graph.members(schema, decl.name, subject)
        return stores.graph.lookup_single(schema, decl.name, subject)


class _Interp:
    def __init__(self, stores: Stores, schema: Schema, domains: Domains):
        self.stores, self.schema, self.domains = stores, schema, domains

    def truth(self, t: Term, env: dict) -> bool:
        return self.value(t, env) is True

    def value(self, t: Term, env: dict):
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Const):
            return t.value
        if isinstance(t, App):
            fn = self.value(t.fn, env)
            args = tuple(self.value(a, env) for a in t.args)
            return self.apply(fn, args)
        if isinstance(t, And):
            return all(self.truth(a, env) for a in t.args)
        if isinstance(t, Or):
            return any(self.truth(a, env) for a in t.args)
        if isinstance(t, Not):
            return not self.truth(t.arg, env)
        if isinstance(t, Implies):
            return (not self.truth(t.lhs, env)) or self.truth(t.rhs, env)
        if isinstance(t, (Exists, Forall)):
            name = t.var.name
            inner = dict(env)

            def holds(v):
                inner[name] = v
                return self.truth(t.body, inner)

            dom = self.domains.of(t.var.type)
            if isinstance(t, Exists):
                return any(holds(v) for v in dom)
            return all(holds(v) for v in dom)
        if isinstance(t, Compare):
            lv, rv = self.value(t.lhs, env), self.value(t.rhs, env)
            if lv is UNDEF or rv is UNDEF:
                return False
            return _compare(t.op, lv, rv)
        if isinstance(t, Arith):
            lv, rv = self.value(t.lhs, env), self.value(t.rhs, env)
            if lv is UNDEF or rv is UNDEF:
                return UNDEF
            if t.op == "+":
                return lv + rv
            return lv - rv if t.op == "-" else lv * rv
        if isinstance(t, Component):
            v = self.value(t.tuple, env)
            return UNDEF if v is UNDEF else v[t.index - 1]
        if isinstance(t, TupleCons):
            return tuple(self.value(i, env) for i in t.items)
        if isinstance(t, Count):
            s = self.value(t.set_term, env)
            if isinstance(s, frozenset):
                return count_value(s)
            return count_value(frozenset(v for v in self.domains.of(t.elem) if s((v,)) is True))
        if isinstance(t, AttrRef):
            return _AttrFn(self.schema.attribute(t.name), self)
        if isinstance(t, Lambda):
            return _Closure(t, env, self)
        raise TypeMismatch(f"cannot evaluate {t!r}")

    def apply(self, fn, args: tuple):
        if fn is UNDEF:
            return UNDEF
        if isinstance(fn, tuple):
            # tuple-match
            if any(a is UNDEF for a in args):
                return False
            return len(fn) == len(args) and all(x == y for x, y in zip(fn, args))
        if isinstance(fn, frozenset):
            if any(a is UNDEF for a in args):
                return False
            return (args[0] if len(args) == 1 else args) in fn
        return fn(args)


def _compare(op: str, a, b) -> bool:
    if op == "=":
        return a == b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def count_value(set_val: frozenset) -> int:
    return len(set_val)


def eval_query(t: Term, stores: Stores, schema: Schema, *, max_domain: int | None = None) -> Relation:
    signature = check_query(t, schema)
    plan = analyze_range_restriction(t, schema)
    domains = Domains(stores, schema, list(constants(t)))
    interp = _Interp(stores, schema, domains)

    enum = plan.enumerated
    doms = [domains.of(b.base) for b in enum]
    size = math.prod(len(d) for d in doms)
    bound = max_domain_bound(max_domain)
    if size > bound:
        raise DomainTooLarge(f"{size} candidate assignments exceed the bound of {bound}", span=t.span)

    conjuncts = top_conjuncts(t.body)
    defining = {b.conjunct for b in plan.derived}
    checks = [c for i, c in enumerate(conjuncts) if i not in defining]
    names = [p.name for p in t.params]
    rows = set()
    for combo in itertools.product(*doms):
        env = {b.var: v for b, v in zip(enum, combo)}
        ok = True
        for b in plan.derived:
            v = interp.value(b.term, env)
            if v is UNDEF or not validate_value(v, b.base, schema):
                ok = False
                break
            env[b.var] = v
        if ok and all(interp.truth(c, env) for c in checks):
            rows.add(tuple(env[n] for n in names))
    return Relation(signature, frozenset(rows))


def eval_formula(t: Term, env: dict, stores: Stores, schema: Schema, extra: Iterable[Const] = ()) -> bool:
    """Truth of a formula under an explicit assignment of its free variables."""
    domains = Domains(stores, schema, list(extra) + list(constants(t)))
    return _Interp(stores, schema, domains).truth(t, env)
