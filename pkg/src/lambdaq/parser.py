"""Concrete syntax for query terms: the raw lambda form and the set-builder form.

Raw::

    lambda t (exists m, r Movie(m)(t, 'Spielberg', r))

Set-builder (desugars to a lambda; atoms may omit columns, which are placed
by type tag and existentially closed)::

    {t^Title | exists m^Movie Movie(m^Movie)(t^Title, 'Spielberg'^Director)}

Precedence, loosest first: ``implies`` (right associative), ``or``, ``and``,
then ``not``/quantifiers, then comparisons, ``+``/``-``, ``*``, and postfix
application, ``[i]`` and ``.Base``.  A quantifier's body is the single
``not``-level formula that follows its binders, so
``exists x R(x) and S(x)`` means ``(exists x R(x)) and S(x)``.
"""

from __future__ import annotations

import datetime
import itertools
import re
from dataclasses import dataclass, replace
from decimal import Decimal

from .core import BOOL, NUMBER, Base, Func, TupleT, TypeExpr, parse_number, render_type
from .errors import (
    ElisionAmbiguity,
    LambdaqError,
    ParseError,
    SourceSpan,
    TypeMismatch,
    UnknownAttribute,
    UnknownBase,
)
from .schema import AttributeDecl, Schema
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
    conj,
    map_children,
    well_formed,
)

# -- lexer ---------------------------------------------------------------------

KEYWORDS = {
    "lambda": "LAMBDA", "λ": "LAMBDA",
    "exists": "EXISTS", "∃": "EXISTS",
    "forall": "FORALL", "∀": "FORALL", "foreach": "FORALL",
    "and": "AND", "∧": "AND",
    "or": "OR", "∨": "OR",
    "not": "NOT", "¬": "NOT",
    "implies": "IMPLIES", "⇒": "IMPLIES", "→": "IMPLIES",
    "TRUE": "TRUE", "true": "TRUE",
    "FALSE": "FALSE", "false": "FALSE",
}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>'(?:[^']|'')*')
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|≤|≥|[λ∃∀∧∨¬⇒→()\[\],^.|{}=<>+\-*])
    """,
    re.VERBOSE,
)

_OP_NORMAL = {"≤": "<=", "≥": ">="}
CMP_TOKENS = {"=", "<", "<=", ">", ">="}


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT STRING NUMBER COUNT OP EOF or a keyword kind
    text: str
    start: int
    end: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.start, self.end)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", span=SourceSpan(pos, pos + 1))
        kind = m.lastgroup
        val = m.group()
        if kind == "ws":
            pass
        elif kind == "ident" or val in KEYWORDS:
            if val in KEYWORDS:
                tokens.append(Token(KEYWORDS[val], val, m.start(), m.end()))
            elif val.startswith("COUNT_") and len(val) > 6:
                tokens.append(Token("COUNT", val[6:], m.start(), m.end()))
            else:
                tokens.append(Token("IDENT", val, m.start(), m.end()))
        elif kind == "string":
            tokens.append(Token("STRING", val[1:-1].replace("''", "'"), m.start(), m.end()))
        elif kind == "number":
            tokens.append(Token("NUMBER", val, m.start(), m.end()))
        else:
            tokens.append(Token("OP", _OP_NORMAL.get(val, val), m.start(), m.end()))
        pos = m.end()
    tokens.append(Token("EOF", "", len(text), len(text)))
    return tokens


# -- parser --------------------------------------------------------------------

class _Hole(Base):
    """Type placeholder; the name carries a ``?`` so it never clashes with a base."""


@dataclass
class _Binder:
    name: str
    internal: str
    type: TypeExpr


class _Parser:
    def __init__(self, text: str, schema: Schema, friendly: bool):
        self.text = text
        self.schema = schema
        self.friendly = friendly
        self.tokens = tokenize(text)
        self.pos = 0
        self.scopes: list[dict[str, _Binder]] = []
        self.pending: list[list[Term]] = []
        self.counter = itertools.count(1)
        self.holes = itertools.count(1)
        self.used_names = {t.text for t in self.tokens if t.kind == "IDENT"}
        self.binder_names: dict[str, str] = {}  # internal -> surface name
        self.tag_constraints: list[tuple[_Hole, Base, SourceSpan]] = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def ahead(self, n: int) -> Token:
        return self.tokens[min(self.pos + n, len(self.tokens) - 1)]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.pos += 1
        return t

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            self.fail(f"expected {op!r}")
        return self.advance()

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", span=tok.span)

    def hole(self) -> _Hole:
        return _Hole(f"?{next(self.holes)}")

    def span_from(self, start: Token) -> SourceSpan:
        prev = self.tokens[self.pos - 1] if self.pos > 0 else start
        return SourceSpan(start.start, max(prev.end, start.start))

    def base_type(self, tok: Token) -> Base:
        if tok.text not in self.schema.bases:
            raise UnknownBase(f"unknown base type {tok.text!r}", span=tok.span)
        return Base(tok.text)

    # scopes
    def bind(self, name: str, t: TypeExpr | None) -> Var:
        internal = f"{name}@{next(self.counter)}"
        self.binder_names[internal] = name
        b = _Binder(name, internal, t if t is not None else self.hole())
        self.scopes[-1][name] = b
        return Var(internal, b.type)

    def lookup(self, name: str) -> _Binder | None:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    # grammar
    def parse_top(self) -> Term:
        if self.friendly:
            term = self.set_builder()
        else:
            term = self.formula()
        if self.tok.kind != "EOF":
            self.fail("unexpected input")
        return term

    def set_builder(self) -> Term:
        start = self.tok
        self.expect_op("{")
        self.scopes.append({})
        params = self.binders()
        self.expect_op("|")
        body = self.formula()
        self.expect_op("}")
        self.scopes.pop()
        return Lambda(tuple(params), body, span=self.span_from(start))

    def binders(self) -> list[Var]:
        out = [self.binder()]
        while True:
            if self.at_op(","):
                self.advance()
                out.append(self.binder())
            elif self._juxtaposed_binder():
                out.append(self.binder())
            else:
                return out

    def _juxtaposed_binder(self) -> bool:
        a, b, c, d = self.tok, self.ahead(1), self.ahead(2), self.ahead(3)
        if not (a.kind == "IDENT" and b.kind == "OP" and b.text == "^" and c.kind == "IDENT"):
            return False
        return not (d.kind == "OP" and d.text in CMP_TOKENS | {"+", "-", "*", "[", "."})

    def binder(self) -> Var:
        tok = self.tok
        if tok.kind != "IDENT":
            self.fail("expected a variable name")
        self.advance()
        t = None
        if self.at_op("^"):
            self.advance()
            if self.tok.kind != "IDENT":
                self.fail("expected a type name after '^'")
            t = self.base_type(self.advance())
        v = self.bind(tok.text, t)
        return replace(v, span=tok.span)

    def formula(self) -> Term:
        return self.implication()

    def implication(self) -> Term:
        start = self.tok
        lhs = self.disjunction()
        if self.at("IMPLIES"):
            self.advance()
            rhs = self.implication()
            return Implies(lhs, rhs, span=self.span_from(start))
        return lhs

    def disjunction(self) -> Term:
        start = self.tok
        parts = [self.conjunction()]
        while self.at("OR"):
            self.advance()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts), span=self.span_from(start))

    def conjunction(self) -> Term:
        start = self.tok
        parts = [self.unary()]
        while self.at("AND"):
            self.advance()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else And(tuple(parts), span=self.span_from(start))

    def unary(self) -> Term:
        start = self.tok
        if self.at("NOT"):
            self.advance()
            return Not(self.unary(), span=self.span_from(start))
        if self.at("EXISTS") or self.at("FORALL"):
            kind = Exists if self.advance().kind == "EXISTS" else Forall
            self.scopes.append({})
            vs = self.binders()
            body = self.unary()
            self.scopes.pop()
            for v in reversed(vs):
                body = kind(v, body, span=self.span_from(start))
            return body
        return self.comparison()

    def comparison(self) -> Term:
        start = self.tok
        self.pending.append([])
        lhs = self.arith()
        if self.tok.kind == "OP" and self.tok.text in CMP_TOKENS:
            op = self.advance().text
            rhs = self.arith()
            result: Term = Compare(op, lhs, rhs, span=self.span_from(start))
        else:
            result = lhs
        side = self.pending.pop()
        if side:
            if result is lhs and self.pending and isinstance(lhs, (Var, Const, Component, Arith, TupleCons)):
                # a value in argument position: the enclosing atom owns the equations
                self.pending[-1].extend(side)
            else:
                result = conj(*side, result)
        return result

    def arith(self) -> Term:
        start = self.tok
        lhs = self.product()
        while self.at_op("+", "-"):
            op = self.advance().text
            lhs = Arith(op, lhs, self.product(), span=self.span_from(start))
        return lhs

    def product(self) -> Term:
        start = self.tok
        lhs = self.postfix()
        while self.at_op("*"):
            self.advance()
            lhs = Arith("*", lhs, self.postfix(), span=self.span_from(start))
        return lhs

    def postfix(self) -> Term:
        start = self.tok
        term = self.primary()
        while True:
            if self.at_op("("):
                self.advance()
                args = [self.formula()]
                while self.at_op(","):
                    self.advance()
                    args.append(self.formula())
                self.expect_op(")")
                term = self.apply(term, args, self.span_from(start))
            elif self.at_op("["):
                self.advance()
                if self.tok.kind != "NUMBER" or "." in self.tok.text:
                    self.fail("expected a component index")
                index = int(self.advance().text)
                self.expect_op("]")
                term = Component(term, index, span=self.span_from(start))
            elif self.at_op(".") and self.ahead(1).kind == "IDENT":
                self.advance()
                term = self.dot(term, start)
            else:
                return term

    def dot(self, term: Term, start: Token) -> Term:
        name_tok = self.advance()
        label_var = None
        if self.at_op("^"):
            self.advance()
            if self.tok.kind != "IDENT":
                self.fail("expected a type name after '^'")
            base = self.base_type(self.advance())
            label_var = name_tok
        else:
            if name_tok.text not in self.schema.bases:
                raise ParseError(f"{name_tok.text!r} is not a type name", span=name_tok.span)
            base = Base(name_tok.text)
        tt = self.static_type(term)
        if not isinstance(tt, TupleT):
            raise ParseError("'.' selection needs a tuple-valued term", span=self.span_from(start))
        hits = [i for i, c in enumerate(tt.components, start=1) if c == base]
        if len(hits) != 1:
            what = "no" if not hits else "more than one"
            raise ParseError(f"{what} component of type {base.name}", span=self.span_from(start))
        comp = Component(term, hits[0], span=self.span_from(start))
        if label_var is None:
            return comp
        var = self.variable(label_var, base)
        self.pending[-1].append(Compare("=", comp, var, span=self.span_from(start)))
        return var

    def primary(self) -> Term:
        tok = self.tok
        if tok.kind == "LAMBDA":
            self.advance()
            self.scopes.append({})
            params = self.binders()
            self.expect_op("(")
            body = self.formula()
            self.expect_op(")")
            self.scopes.pop()
            return Lambda(tuple(params), body, span=self.span_from(tok))
        if tok.kind == "COUNT":
            self.advance()
            if tok.text not in self.schema.bases:
                raise UnknownBase(f"unknown base type {tok.text!r}", span=tok.span)
            self.expect_op("(")
            inner = self.formula()
            self.expect_op(")")
            return Count(Base(tok.text), inner, span=self.span_from(tok))
        if tok.kind in ("TRUE", "FALSE"):
            self.advance()
            return Const(tok.kind == "TRUE", BOOL, span=tok.span)
        if tok.kind == "STRING":
            self.advance()
            return Const(tok.text, self.tag() or self.hole(), span=self.span_from(tok))
        if tok.kind == "NUMBER" or (self.at_op("-") and self.ahead(1).kind == "NUMBER"):
            sign = ""
            if self.at_op("-"):
                self.advance()
                sign = "-"
            num = self.advance()
            return Const(parse_number(sign + num.text), self.tag() or self.hole(), span=self.span_from(tok))
        if tok.kind == "IDENT":
            self.advance()
            tag = self.tag()
            return self.variable(tok, tag)
        if self.at_op("("):
            self.advance()
            items = [self.formula()]
            trailing = False
            while self.at_op(","):
                self.advance()
                if self.at_op(")"):
                    trailing = True
                    break
                items.append(self.formula())
            self.expect_op(")")
            if len(items) == 1 and not trailing:
                return items[0]
            return TupleCons(tuple(items), span=self.span_from(tok))
        self.fail("expected a term")

    def tag(self) -> Base | None:
        if not self.at_op("^"):
            return None
        self.advance()
        if self.tok.kind != "IDENT":
            self.fail("expected a type name after '^'")
        return self.base_type(self.advance())

    def variable(self, tok: Token, tag: Base | None) -> Term:
        b = self.lookup(tok.text)
        if b is not None:
            if tag is not None:
                if isinstance(b.type, _Hole):
                    self.tag_constraints.append((b.type, tag, tok.span))
                    return Var(b.internal, tag, span=tok.span)
                if b.type != tag:
                    raise TypeMismatch(
                        f"variable {tok.text} is bound as {b.type.name}, tagged {tag.name}", span=tok.span
                    )
            return Var(b.internal, b.type, span=tok.span)
        if tag is None and self.at_op("("):
            try:
                decl = self.schema.resolve_name(tok.text)
            except LambdaqError:
                decl = None
            if not isinstance(decl, AttributeDecl):
                raise UnknownAttribute(f"unknown attribute {tok.text!r}", span=tok.span)
            return AttrRef(decl.name, span=tok.span)
        if tag is None:
            try:
                decl = self.schema.resolve_name(tok.text)
            except LambdaqError:
                decl = None
            if isinstance(decl, AttributeDecl):
                return AttrRef(decl.name, span=tok.span)
        return Var(tok.text, tag or self.hole(), span=tok.span)

    # static types for elision and dot selection
    def static_type(self, t: Term) -> TypeExpr | None:
        if isinstance(t, AttrRef):
            return self.schema.attributes[t.name].type
        if isinstance(t, (Var, Const)):
            return None if isinstance(t.type, _Hole) else t.type
        if isinstance(t, App):
            ft = self.static_type(t.fn)
            if isinstance(ft, Func):
                return ft.result
            if isinstance(ft, TupleT):
                return BOOL
            return None
        if isinstance(t, Component):
            tt = self.static_type(t.tuple)
            if isinstance(tt, TupleT) and 1 <= t.index <= len(tt.components):
                return tt.components[t.index - 1]
        return None

    def apply(self, fn: Term, args: list[Term], span: SourceSpan) -> Term:
        if not self.friendly:
            return App(fn, tuple(args), span=span)
        ft = self.static_type(fn)
        if isinstance(ft, Func) and ft.result == BOOL:
            columns = ft.args
        elif isinstance(ft, TupleT):
            columns = ft.components
        else:
            return App(fn, tuple(args), span=span)
        if len(args) >= len(columns):
            return App(fn, tuple(args), span=span)
        placed: dict[int, Term] = {}
        for arg in args:
            at = self.static_type(arg)
            if at is None:
                raise ElisionAmbiguity(
                    "cannot place an untagged argument in an atom with omitted columns; add a ^Type tag",
                    span=arg.span or span,
                )
            hits = [i for i, c in enumerate(columns) if c == at and i not in placed]
            if len(hits) != 1:
                why = "no free column" if not hits else "several columns"
                raise ElisionAmbiguity(f"{why} of type {render_type(at)} for an argument", span=arg.span or span)
            placed[hits[0]] = arg
        fresh = []
        full = []
        for i, col in enumerate(columns):
            if i in placed:
                full.append(placed[i])
            else:
                name = self.fresh_name()
                v = Var(name, col)
                fresh.append(v)
                full.append(v)
        atom: Term = App(fn, tuple(full), span=span)
        for v in reversed(fresh):
            atom = Exists(v, atom, span=span)
        return atom

    def fresh_name(self) -> str:
        while True:
            name = f"_e{next(self.counter)}"
            if name not in self.used_names:
                self.used_names.add(name)
                return name


# -- inference of untagged binders and constants ---------------------------------

class _Unifier:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.parent: dict[str, TypeExpr] = {}

    def find(self, t: TypeExpr) -> TypeExpr:
        while isinstance(t, _Hole) and t.name in self.parent:
            t = self.parent[t.name]
        return t

    def unify(self, a: TypeExpr, b: TypeExpr) -> None:
        a, b = self.find(a), self.find(b)
        if a == b:
            return
        if isinstance(a, _Hole):
            self.parent[a.name] = b
        elif isinstance(b, _Hole):
            self.parent[b.name] = a
        elif isinstance(a, Func) and isinstance(b, Func) and len(a.args) == len(b.args):
            self.unify(a.result, b.result)
            for x, y in zip(a.args, b.args):
                self.unify(x, y)
        elif isinstance(a, TupleT) and isinstance(b, TupleT) and len(a.components) == len(b.components):
            for x, y in zip(a.components, b.components):
                self.unify(x, y)
        # genuine mismatches are reported later by the type checker

    def resolve(self, t: TypeExpr) -> TypeExpr:
        t = self.find(t)
        if isinstance(t, Func):
            return Func(self.resolve(t.result), tuple(self.resolve(a) for a in t.args))
        if isinstance(t, TupleT):
            return TupleT(tuple(self.resolve(c) for c in t.components))
        return t

    def infer(self, t: Term) -> TypeExpr:
        if isinstance(t, (Var, Const)):
            return t.type
        if isinstance(t, AttrRef):
            return self.schema.attributes[t.name].type
        if isinstance(t, App):
            ft = self.find(self.infer(t.fn))
            ats = [self.infer(a) for a in t.args]
            if isinstance(ft, Func):
                if len(ft.args) == len(ats):
                    for p, a in zip(ft.args, ats):
                        self.unify(p, a)
                return ft.result
            if isinstance(ft, TupleT):
                if len(ft.components) == len(ats):
                    for p, a in zip(ft.components, ats):
                        self.unify(p, a)
                return BOOL
            return _Hole("?app")
        if isinstance(t, Component):
            tt = self.find(self.infer(t.tuple))
            if isinstance(tt, TupleT) and 1 <= t.index <= len(tt.components):
                return tt.components[t.index - 1]
            return _Hole("?comp")
        if isinstance(t, Compare):
            self.unify(self.infer(t.lhs), self.infer(t.rhs))
            return BOOL
        if isinstance(t, Arith):
            lt = self.infer(t.lhs)
            self.unify(lt, self.infer(t.rhs))
            return lt
        if isinstance(t, Count):
            st = self.find(self.infer(t.set_term))
            if isinstance(st, Func) and len(st.args) == 1:
                self.unify(st.args[0], t.elem)
            return NUMBER
        if isinstance(t, Lambda):
            body = self.infer(t.body)
            return Func(body, tuple(p.type for p in t.params))
        if isinstance(t, TupleCons):
            return TupleT(tuple(self.infer(i) for i in t.items))
        for c in t.children():
            self.infer(c)
        return BOOL


def _finish(term: Term, parser: _Parser, schema: Schema) -> Term:
    u = _Unifier(schema)
    for hole, tag, span in parser.tag_constraints:
        found = u.find(hole)
        if not isinstance(found, _Hole) and found != tag:
            raise TypeMismatch(f"conflicting type tags {found} and {tag.name}", span=span)
        u.unify(hole, tag)
    u.infer(term)
    # a second pass lets constraints flow through application results
    u.infer(term)

    def fix_type(t: TypeExpr | None, what: str, span, value=None) -> TypeExpr | None:
        if t is None:
            return None
        r = u.resolve(t)
        if _has_hole(r):
            if what == "constant" and isinstance(value, (int, Decimal)) and not isinstance(value, bool):
                return NUMBER
            if what == "free":
                return None
            raise ParseError(f"cannot infer the type of {what}; add a ^Type tag", span=span)
        return r

    def rebuild(t: Term) -> Term:
        if isinstance(t, Var):
            internal = t.name
            name = parser.binder_names.get(internal, internal)
            kind = f"variable {name!r}" if internal in parser.binder_names else "free"
            return replace(t, name=name, type=fix_type(t.type, kind, t.span))
        if isinstance(t, Const):
            ct = fix_type(t.type, "constant", t.span, t.value)
            return replace(t, type=ct, value=_coerce_const(t.value, ct, schema, t.span))
        if isinstance(t, Lambda):
            params = tuple(rebuild(p) for p in t.params)
            return replace(t, params=params, body=rebuild(t.body))
        if isinstance(t, (Exists, Forall)):
            return replace(t, var=rebuild(t.var), body=rebuild(t.body))
        return map_children(t, rebuild)

    return rebuild(term)


def _has_hole(t: TypeExpr) -> bool:
    if isinstance(t, _Hole):
        return True
    if isinstance(t, Func):
        return _has_hole(t.result) or any(_has_hole(a) for a in t.args)
    if isinstance(t, TupleT):
        return any(_has_hole(c) for c in t.components)
    return False


def _coerce_const(value, t: TypeExpr | None, schema: Schema, span):
    if not isinstance(t, Base) or t.name not in schema.bases:
        return value
    carrier = schema.bases[t.name].carrier
    if carrier == "Date" and isinstance(value, str):
        try:
            return datetime.date.fromisoformat(value)
        except ValueError:
            raise TypeMismatch(f"{value!r} is not a YYYY-MM-DD date", span=span) from None
    return value


def _parse(text: str, schema: Schema, friendly: bool) -> Term:
    p = _Parser(text, schema, friendly)
    p.scopes.append({})
    term = p.parse_top()
    term = _finish(term, p, schema)
    well_formed(term)
    return term


def parse_term_raw(text: str, schema: Schema) -> Term:
    return _parse(text, schema, friendly=False)


def parse_term_friendly(text: str, schema: Schema) -> Term:
    return _parse(text, schema, friendly=True)


def parse_query(text: str, schema: Schema, syntax: str = "friendly") -> Term:
    """Parse in the given mode; friendly mode also accepts a bare raw term."""
    if syntax == "raw":
        return parse_term_raw(text, schema)
    if syntax != "friendly":
        raise ValueError(f"unknown syntax {syntax!r}")
    if text.lstrip().startswith("{"):
        return parse_term_friendly(text, schema)
    return _parse_friendly_body(text, schema)


def _parse_friendly_body(text: str, schema: Schema) -> Term:
    p = _Parser(text, schema, friendly=True)
    p.scopes.append({})
    term = p.formula()
    if p.tok.kind != "EOF":
        p.fail("unexpected input")
    term = _finish(term, p, schema)
    well_formed(term)
    return term


# -- rendering ---------------------------------------------------------------------

_IMPLIES, _OR, _AND, _UNARY, _CMP, _ADD, _MUL, _ATOM = range(1, 9)


def render_term(t: Term) -> str:
    """Raw-syntax text; binders and constants always carry their type tags."""
    return _render(t, _IMPLIES)


def _render_const(c: Const) -> str:
    v = c.value
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, str):
        lit = "'" + v.replace("'", "''") + "'"
    elif isinstance(v, datetime.date):
        lit = f"'{v.isoformat()}'"
    else:
        lit = str(v)
    return f"{lit}^{c.type.name}" if isinstance(c.type, Base) else lit


def _render_binder(v: Var) -> str:
    return f"{v.name}^{v.type.name}" if isinstance(v.type, Base) else v.name


def _render(t: Term, level: int) -> str:
    own, text = _render_own(t)
    return f"({text})" if own < level else text


def _render_own(t: Term) -> tuple[int, str]:
    if isinstance(t, Var):
        return _ATOM, t.name
    if isinstance(t, Const):
        return (_ADD if str(t.value).startswith("-") else _ATOM), _render_const(t)
    if isinstance(t, AttrRef):
        return _ATOM, t.name
    if isinstance(t, App):
        args = ", ".join(_render(a, _IMPLIES) for a in t.args)
        return _ATOM, f"{_render(t.fn, _ATOM)}({args})"
    if isinstance(t, Component):
        return _ATOM, f"{_render(t.tuple, _ATOM)}[{t.index}]"
    if isinstance(t, Count):
        return _ATOM, f"COUNT_{t.elem.name}({_render(t.set_term, _IMPLIES)})"
    if isinstance(t, TupleCons):
        inner = ", ".join(_render(i, _IMPLIES) for i in t.items)
        return _ATOM, f"({inner},)" if len(t.items) == 1 else f"({inner})"
    if isinstance(t, Lambda):
        params = ", ".join(_render_binder(p) for p in t.params)
        return _ATOM, f"lambda {params} ({_render(t.body, _IMPLIES)})"
    if isinstance(t, Arith):
        if t.op == "*":
            return _MUL, f"{_render(t.lhs, _MUL)} * {_render(t.rhs, _ATOM)}"
        return _ADD, f"{_render(t.lhs, _ADD)} {t.op} {_render(t.rhs, _MUL)}"
    if isinstance(t, Compare):
        return _CMP, f"{_render(t.lhs, _ADD)} {t.op} {_render(t.rhs, _ADD)}"
    if isinstance(t, Not):
        return _UNARY, f"not {_render(t.arg, _UNARY)}"
    if isinstance(t, (Exists, Forall)):
        kind = type(t)
        vs = []
        body = t
        while isinstance(body, kind):
            vs.append(body.var)
            body = body.body
        word = "exists" if kind is Exists else "forall"
        binders = ", ".join(_render_binder(v) for v in vs)
        return _UNARY, f"{word} {binders} {_render(body, _UNARY)}"
    if isinstance(t, And):
        return _AND, " and ".join(_render(a, _UNARY) for a in t.args)
    if isinstance(t, Or):
        return _OR, " or ".join(_render(a, _AND) for a in t.args)
    if isinstance(t, Implies):
        return _IMPLIES, f"{_render(t.lhs, _OR)} implies {_render(t.rhs, _IMPLIES)}"
    raise TypeError(f"cannot render {t!r}")
