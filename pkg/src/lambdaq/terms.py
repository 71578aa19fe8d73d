"""Abstract syntax of query terms.

A term is built from typed variables, constants, attribute references,
application, lambda abstraction, tuples and 1-based component selection,
plus the logical layer (connectives, ``exists``/``forall``, comparisons,
``COUNT``) that the query language types as ordinary functions.
"""

from __future__ import annotations

import itertools
from collections import Counter
from collections.abc import Iterator
from dataclasses import dataclass, field, replace

from .core import UNDEF, TypeExpr
from .errors import SourceSpan, TermError


class Term:
    span: SourceSpan | None

    def children(self) -> tuple[Term, ...]:
        return ()


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Term):
    name: str
    type: TypeExpr | None = None
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class Const(Term):
    value: object
    type: TypeExpr | None = None
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class AttrRef(Term):
    name: str
    span: SourceSpan | None = _span()


@dataclass(frozen=True)
class App(Term):
    fn: Term
    args: tuple[Term, ...]
    span: SourceSpan | None = _span()

    def children(self):
        return (self.fn, *self.args)


@dataclass(frozen=True)
class Lambda(Term):
    params: tuple[Var, ...]
    body: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class TupleCons(Term):
    items: tuple[Term, ...]
    span: SourceSpan | None = _span()

    def children(self):
        return self.items


@dataclass(frozen=True)
class Component(Term):
    tuple: Term
    index: int
    span: SourceSpan | None = _span()

    def children(self):
        return (self.tuple,)


@dataclass(frozen=True)
class Not(Term):
    arg: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class And(Term):
    args: tuple[Term, ...]
    span: SourceSpan | None = _span()

    def children(self):
        return self.args


@dataclass(frozen=True)
class Or(Term):
    args: tuple[Term, ...]
    span: SourceSpan | None = _span()

    def children(self):
        return self.args


@dataclass(frozen=True)
class Implies(Term):
    lhs: Term
    rhs: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class Exists(Term):
    var: Var
    body: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Forall(Term):
    var: Var
    body: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Count(Term):
    elem: TypeExpr
    set_term: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.set_term,)


COMPARE_OPS = ("=", "<", "<=", ">", ">=")
ARITH_OPS = ("+", "-", "*")


@dataclass(frozen=True)
class Compare(Term):
    op: str
    lhs: Term
    rhs: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.lhs, self.rhs)


@dataclass(frozen=True)
class Arith(Term):
    op: str
    lhs: Term
    rhs: Term
    span: SourceSpan | None = _span()

    def children(self):
        return (self.lhs, self.rhs)


Quantifier = (Exists, Forall)


def conj(*parts: Term) -> Term:
    """``And`` of the parts, flattening nested conjunctions."""
    flat: list[Term] = []
    for p in parts:
        flat.extend(p.args if isinstance(p, And) else (p,))
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def walk(t: Term) -> Iterator[Term]:
    yield t
    for c in t.children():
        yield from walk(c)


def attr_refs(t: Term) -> Counter:
    return Counter(n.name for n in walk(t) if isinstance(n, AttrRef))


def binders(t: Term) -> tuple[Var, ...]:
    if isinstance(t, Lambda):
        return t.params
    if isinstance(t, Quantifier):
        return (t.var,)
    return ()


def free_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    bound = {v.name for v in binders(t)}
    out: set[str] = set()
    for c in t.children():
        out |= free_vars(c)
    return out - bound


def all_var_names(t: Term) -> set[str]:
    out = set()
    for n in walk(t):
        if isinstance(n, Var):
            out.add(n.name)
        for b in binders(n):
            out.add(b.name)
    return out


def fresh_name(stem: str, used: set[str]) -> str:
    i = 1
    while f"{stem}{i}" in used:
        i += 1
    name = f"{stem}{i}"
    used.add(name)
    return name


def rename_free(t: Term, mapping: dict[str, str]) -> Term:
    """Rename free variable occurrences; targets must be globally fresh."""
    if not mapping:
        return t
    if isinstance(t, Var):
        return replace(t, name=mapping[t.name]) if t.name in mapping else t
    bound = {v.name for v in binders(t)}
    inner = {k: v for k, v in mapping.items() if k not in bound} if bound else mapping
    return map_children(t, lambda c: rename_free(c, inner))


def map_children(t: Term, f) -> Term:
    if isinstance(t, App):
        return replace(t, fn=f(t.fn), args=tuple(f(a) for a in t.args))
    if isinstance(t, Lambda):
        return replace(t, body=f(t.body))
    if isinstance(t, TupleCons):
        return replace(t, items=tuple(f(a) for a in t.items))
    if isinstance(t, Component):
        return replace(t, tuple=f(t.tuple))
    if isinstance(t, Not):
        return replace(t, arg=f(t.arg))
    if isinstance(t, (And, Or)):
        return replace(t, args=tuple(f(a) for a in t.args))
    if isinstance(t, Implies):
        return replace(t, lhs=f(t.lhs), rhs=f(t.rhs))
    if isinstance(t, (Exists, Forall)):
        return replace(t, body=f(t.body))
    if isinstance(t, Count):
        return replace(t, set_term=f(t.set_term))
    if isinstance(t, (Compare, Arith)):
        return replace(t, lhs=f(t.lhs), rhs=f(t.rhs))
    return t


def substitute(t: Term, name: str, value: Term) -> Term:
    """Capture-avoiding substitution of ``value`` for free ``name``."""
    if isinstance(t, Var):
        return value if t.name == name else t
    bs = binders(t)
    if any(b.name == name for b in bs):
        return t
    danger = free_vars(value)
    if any(b.name in danger for b in bs) and name in free_vars(t):
        used = all_var_names(t) | danger | {name}
        mapping = {b.name: fresh_name(b.name + "_", used) for b in bs if b.name in danger}
        t = _rename_binders(t, mapping)
    return map_children(t, lambda c: substitute(c, name, value))


def _rename_binders(t: Term, mapping: dict[str, str]) -> Term:
    if isinstance(t, Lambda):
        params = tuple(replace(p, name=mapping.get(p.name, p.name)) for p in t.params)
        return replace(t, params=params, body=rename_free(t.body, mapping))
    var = t.var
    return replace(t, var=replace(var, name=mapping.get(var.name, var.name)), body=rename_free(t.body, mapping))


# -- well-formedness ------------------------------------------------------------

def well_formed(t: Term) -> bool:
    """Raise :class:`TermError` on the first structural defect; else True."""
    for n in walk(t):
        if isinstance(n, Lambda):
            names = [p.name for p in n.params]
            if not names:
                raise TermError("lambda without parameters", span=n.span)
            if len(names) != len(set(names)):
                dup = next(x for x in names if names.count(x) > 1)
                raise TermError(f"duplicate binder {dup!r} in one binder list", span=n.span)
        elif isinstance(n, App) and not n.args:
            raise TermError("application with no arguments", span=n.span)
        elif isinstance(n, Component) and n.index < 1:
            raise TermError(f"component index must be >= 1, got {n.index}", span=n.span)
        elif isinstance(n, Const) and n.value is UNDEF:
            raise TermError("UNDEF is not a literal", span=n.span)
        elif isinstance(n, (And, Or)) and len(n.args) < 2:
            raise TermError("connective needs two operands", span=n.span)
        elif isinstance(n, Compare) and n.op not in COMPARE_OPS:
            raise TermError(f"unknown comparison {n.op!r}", span=n.span)
        elif isinstance(n, Arith) and n.op not in ARITH_OPS:
            raise TermError(f"unknown arithmetic operator {n.op!r}", span=n.span)
    return True


# -- alpha equivalence --------------------------------------------------------------

_MAX_PERMUTED_BLOCK = 6


def alpha_equal(a: Term, b: Term) -> bool:
    """Equality up to consistent renaming of bound variables.

    Adjacent binders of the same quantifier commute, so ``exists m, r`` and
    ``exists r, m`` over the same body are equal.
    """
    return _aeq(a, b, {}, {}, itertools.count())


def _quant_block(t: Term) -> tuple[list[Var], Term]:
    kind = type(t)
    vs = []
    while isinstance(t, kind):
        vs.append(t.var)
        t = t.body
    return vs, t


def _aeq(a: Term, b: Term, ea: dict, eb: dict, ids) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ia, ib = ea.get(a.name), eb.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, Const):
        return type(a.value) is type(b.value) and a.value == b.value and a.type == b.type
    if isinstance(a, AttrRef):
        return a.name == b.name
    if isinstance(a, Lambda):
        if len(a.params) != len(b.params):
            return False
        if any(p.type != q.type for p, q in zip(a.params, b.params)):
            return False
        ea2, eb2 = dict(ea), dict(eb)
        for p, q in zip(a.params, b.params):
            i = next(ids)
            ea2[p.name] = eb2[q.name] = i
        return _aeq(a.body, b.body, ea2, eb2, ids)
    if isinstance(a, (Exists, Forall)):
        va, body_a = _quant_block(a)
        vb, body_b = _quant_block(b)
        if len(va) != len(vb):
            return False
        names_a = [v.name for v in va]
        names_b = [v.name for v in vb]
        if (
            len(va) > _MAX_PERMUTED_BLOCK
            or len(set(names_a)) != len(names_a)
            or len(set(names_b)) != len(names_b)
        ):
            perms = [tuple(vb)]
        else:
            perms = itertools.permutations(vb)
        for perm in perms:
            if any(p.type != q.type for p, q in zip(va, perm)):
                continue
            ea2, eb2 = dict(ea), dict(eb)
            for p, q in zip(va, perm):
                i = next(ids)
                ea2[p.name] = eb2[q.name] = i
            if _aeq(body_a, body_b, ea2, eb2, ids):
                return True
        return False
    if isinstance(a, Component):
        return a.index == b.index and _aeq(a.tuple, b.tuple, ea, eb, ids)
    if isinstance(a, Count):
        return a.elem == b.elem and _aeq(a.set_term, b.set_term, ea, eb, ids)
    if isinstance(a, (Compare, Arith)) and a.op != b.op:
        return False
    ca, cb = a.children(), b.children()
    return len(ca) == len(cb) and all(_aeq(x, y, ea, eb, ids) for x, y in zip(ca, cb))


def constants(t: Term) -> Iterator[Const]:
    for n in walk(t):
        if isinstance(n, Const):
            yield n
