"""A small relational-calculus IR shared by the SQL and Cypher back ends.

A :class:`Block` is a ``SELECT``-like unit: scans of stored tables (one per
atom or attribute lookup), conditions over their columns, and a select
list.  Conditions may nest further blocks under ``EXISTS``.  Query
variables never appear in the IR; each is replaced by the column (or
literal) it was bound to when its block was compiled.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..core import Base
from ..errors import UnsupportedConstruct
from ..schema import AttributeDecl, Schema
from ..terms import (
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
    Var,
    all_var_names,
    fresh_name,
    free_vars,
    map_children,
    rename_free,
    substitute,
    walk,
)

# -- operands and conditions ------------------------------------------------------


@dataclass(frozen=True)
class Col:
    alias: str
    column: str


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class ArithOp:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class CountSub:
    block: Block
    target: object


@dataclass(frozen=True)
class Scan:
    alias: str
    table: str
    columns: tuple[str, ...]
    decl: AttributeDecl | None = None  # None for a domain scan
    base: str | None = None  # base of a domain scan

    @property
    def is_domain(self) -> bool:
        return self.decl is None


@dataclass(frozen=True)
class Cmp:
    op: str
    lhs: object
    rhs: object


@dataclass(frozen=True)
class NotC:
    arg: object


@dataclass(frozen=True)
class AndC:
    args: tuple


@dataclass(frozen=True)
class OrC:
    args: tuple


@dataclass(frozen=True)
class ExistsC:
    block: Block


@dataclass(frozen=True)
class BoolC:
    value: bool


@dataclass(frozen=True)
class Block:
    scans: tuple[Scan, ...]
    conds: tuple
    select: tuple[tuple[str, object], ...] = ()
    # query variables bound in this block, in binding order (used for naming)
    bindings: tuple[tuple[str, object], ...] = ()


def domain_table(base: str) -> str:
    return f"dom_{base}"


SUBJECT = "src"


# -- term helpers ------------------------------------------------------------------


def lookup_parts(t: Term) -> tuple[AttrRef, Term, int | None] | None:
    """``(attr, subject, component)`` when ``t`` reads a single-valued attribute."""
    index = None
    if isinstance(t, Component):
        index, t = t.index, t.tuple
    if isinstance(t, App) and isinstance(t.fn, AttrRef) and len(t.args) == 1:
        return t.fn, t.args[0], index
    return None


def has_lookup(t: Term, schema: Schema) -> bool:
    """Lookups outside any nested binder (those belong to the nested block)."""
    if isinstance(t, (Lambda, Exists, Forall, Count)):
        return False
    parts = lookup_parts(t)
    if parts and schema.attribute(parts[0].name).shape != "relation":
        return True
    return any(has_lookup(c, schema) for c in t.children())


def atom_parts(t: Term, schema: Schema) -> tuple[AttributeDecl, Term | None, tuple[Term, ...]] | None:
    """``(decl, subject, args)`` for a membership / tuple-match atom."""
    if not isinstance(t, App):
        return None
    if isinstance(t.fn, AttrRef):
        decl = schema.attribute(t.fn.name)
        if decl.shape == "relation":
            return decl, None, t.args
        return None
    inner = t.fn
    if isinstance(inner, App) and isinstance(inner.fn, AttrRef) and len(inner.args) == 1:
        decl = schema.attribute(inner.fn.name)
        if decl.shape != "relation":
            return decl, inner.args[0], t.args
    return None


def normalize(t: Term) -> Term:
    """Beta-reduce applied lambdas and give every ``COUNT`` a lambda set."""
    t = map_children(t, normalize)
    if isinstance(t, App) and isinstance(t.fn, Lambda) and len(t.fn.params) == len(t.args):
        body = t.fn.body
        for p, a in zip(t.fn.params, t.args):
            body = substitute(body, p.name, a)
        return normalize(body)
    if isinstance(t, Count) and not isinstance(t.set_term, Lambda):
        x = Var(fresh_name("x", all_var_names(t)), t.elem)
        return Count(t.elem, Lambda((x,), App(t.set_term, (x,))), span=t.span)
    return t


# -- compiler ------------------------------------------------------------------------

_UNBOUND = object()


@dataclass
class _Frame:
    scope: dict
    local: dict  # name -> Var, intro variables of this block
    scans: list = field(default_factory=list)
    conds: list = field(default_factory=list)
    bindings: list = field(default_factory=list)

    def bind(self, name: str, operand) -> None:
        self.scope[name] = operand
        self.bindings.append((name, operand))

    def unbound_local(self, t: Term) -> bool:
        return isinstance(t, Var) and t.name in self.local and self.scope.get(t.name) is _UNBOUND


class Compiler:
    """Compile terms over one source into :class:`Block` trees.

    ``mode="domain"`` ranges variables not guarded by a positive atom over
    a domain table (exact active-domain semantics).  ``mode="first"`` draws
    their range from the first atom that mentions them, which gives the
    conventional SQL/Cypher shape but needs no auxiliary tables.
    """

    def __init__(self, schema: Schema, source: str, mode: str = "domain"):
        self.schema = schema
        self.source = source
        self.mode = mode
        self._aliases = itertools.count(1)
        self.domains: set[str] = set()

    # scans

    def _attr_scan(self, decl: AttributeDecl, span) -> Scan:
        if decl.source != self.source:
            raise UnsupportedConstruct(
                f"{decl.name} lives in the {decl.source} source, not the {self.source} one", span=span
            )
        cols = decl.column_names()
        if decl.shape != "relation":
            cols = (SUBJECT, *cols)
        return Scan(f"t{next(self._aliases)}", decl.name, cols, decl)

    def _domain_scan(self, base: Base) -> Scan:
        self.domains.add(base.name)
        return Scan(f"t{next(self._aliases)}", domain_table(base.name), ("v",), None, base.name)

    # entry points

    def query(self, params, body: Term, derived: dict[str, Term] | None = None, conjuncts=None) -> Block:
        items = list(conjuncts) if conjuncts is not None else [body]
        return self.block(list(params), items, {}, select=[p.name for p in params], derived=derived or {})

    def block(self, intro, conjuncts, scope, *, select=(), count_target=None, derived=None) -> Block:
        frame = _Frame(dict(scope), {})
        for v in intro:
            frame.local[v.name] = v
            frame.scope[v.name] = _UNBOUND
        items = self._flatten(list(conjuncts), frame)

        rest, compares = [], []
        for c in items:
            if atom_parts(c, self.schema):
                self._positive_atom(c, frame)
            elif isinstance(c, Compare) and has_lookup(c, self.schema):
                compares.append(c)
            else:
                rest.append(c)
        progress = True
        while progress:
            progress = False
            for c in list(compares):
                if self._compare_ready(c, frame):
                    compares.remove(c)
                    self._positive_compare(c, frame)
                    progress = True
        rest = compares + rest

        rest = self._bind_equalities(rest, frame)

        for name, v in frame.local.items():
            if frame.scope[name] is _UNBOUND and name not in (derived or {}):
                self._range(v, rest + list((derived or {}).values()), frame)

        for name, term in (derived or {}).items():
            frame.bind(name, self.operand(term, frame.scope))

        for c in rest:
            cond = self.cond(c, frame.scope)
            if not (isinstance(cond, Cmp) and cond.op == "=" and cond.lhs == cond.rhs):
                frame.conds.append(cond)

        sel = tuple((n, frame.scope[n]) for n in select)
        if count_target is not None:
            sel = (("count", frame.scope[count_target]),)
        return Block(tuple(frame.scans), tuple(frame.conds), sel, tuple(frame.bindings))

    def _flatten(self, items: list, frame: _Frame) -> list:
        out = []
        queue = list(items)
        while queue:
            c = queue.pop(0)
            if isinstance(c, And):
                queue[0:0] = list(c.args)
            elif isinstance(c, Exists):
                var, body = c.var, c.body
                taken = set(frame.scope).union(*(free_vars(x) for x in out + queue))
                if var.name in taken:
                    used = taken | all_var_names(c) | set(frame.local)
                    new = fresh_name(var.name + "_", used)
                    body = rename_free(body, {var.name: new})
                    var = Var(new, var.type, span=var.span)
                frame.local[var.name] = var
                frame.scope[var.name] = _UNBOUND
                queue.insert(0, body)
            elif isinstance(c, Const) and c.value is True:
                continue
            else:
                out.append(c)
        return out

    def _bind_or_cond(self, arg: Term, col: Col, frame: _Frame) -> None:
        if frame.unbound_local(arg):
            frame.bind(arg.name, col)
        else:
            other = self.operand(arg, frame.scope, frame)
            if other != col:
                frame.conds.append(Cmp("=", col, other))

    def _positive_atom(self, c: Term, frame: _Frame) -> None:
        decl, subject, args = atom_parts(c, self.schema)
        scan = self._attr_scan(decl, c.span)
        frame.scans.append(scan)
        cols = scan.columns
        if subject is not None:
            self._bind_or_cond(subject, Col(scan.alias, SUBJECT), frame)
            cols = cols[1:]
        if len(args) != len(cols):
            raise UnsupportedConstruct(f"{decl.name} applied to {len(args)} arguments", span=c.span)
        for arg, col in zip(args, cols):
            self._bind_or_cond(arg, Col(scan.alias, col), frame)

    @staticmethod
    def _compare_ready(c: Compare, frame: _Frame) -> bool:
        """Whether every unbound variable of ``c`` gets bound by compiling it."""
        allowed = set()
        for side in (c.lhs, c.rhs):
            parts = lookup_parts(side)
            if parts and isinstance(parts[1], Var):
                allowed.add(parts[1].name)
            if c.op == "=" and isinstance(side, Var):
                allowed.add(side.name)
        unbound = {n for n in free_vars(c) if frame.unbound_local(Var(n))}
        return unbound <= allowed

    def _positive_compare(self, c: Compare, frame: _Frame) -> None:
        lhs, rhs = c.lhs, c.rhs
        if c.op == "=" and frame.unbound_local(lhs) and not frame.unbound_local(rhs):
            lhs, rhs = rhs, lhs
        left = self.operand(lhs, frame.scope, frame)
        if c.op == "=" and frame.unbound_local(rhs) and isinstance(left, (Col, Lit)):
            frame.bind(rhs.name, left)
            return
        right = self.operand(rhs, frame.scope, frame)
        if not (c.op == "=" and left == right):
            frame.conds.append(Cmp(c.op, left, right))

    def _bind_equalities(self, rest: list, frame: _Frame) -> list:
        changed = True
        while changed:
            changed = False
            for c in list(rest):
                if not (isinstance(c, Compare) and c.op == "="):
                    continue
                for a, b in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
                    if frame.unbound_local(a) and self._safe_source(b, frame):
                        frame.bind(a.name, self.operand(b, frame.scope))
                        rest.remove(c)
                        changed = True
                        break
        return rest

    @staticmethod
    def _safe_source(t: Term, frame: _Frame) -> bool:
        if isinstance(t, Const):
            return True
        if isinstance(t, Var):
            op = frame.scope.get(t.name, _UNBOUND)
            return isinstance(op, (Col, Lit))
        return False

    def _range(self, v: Var, rest: list, frame: _Frame) -> None:
        if self.mode == "domain":
            scan = self._domain_scan(v.type)
            frame.scans.append(scan)
            frame.bind(v.name, Col(scan.alias, "v"))
            return
        found = _first_occurrence(v.name, rest, self.schema)
        if found is None:
            raise UnsupportedConstruct(f"variable {v.name} is not range-restricted by any atom", span=v.span)
        decl, column = found
        scan = self._attr_scan(decl, v.span)
        frame.scans.append(scan)
        frame.bind(v.name, Col(scan.alias, column))

    # operands and conditions

    def operand(self, t: Term, scope: dict, frame: _Frame | None = None):
        if isinstance(t, Var):
            op = scope.get(t.name, _UNBOUND)
            if op is _UNBOUND:
                raise UnsupportedConstruct(f"variable {t.name} is not range-restricted here", span=t.span)
            return op
        if isinstance(t, Const):
            return Lit(t.value)
        if isinstance(t, Arith):
            return ArithOp(t.op, self.operand(t.lhs, scope, frame), self.operand(t.rhs, scope, frame))
        if isinstance(t, Count):
            lam = normalize(t).set_term
            if not isinstance(lam, Lambda) or len(lam.params) != 1:
                raise UnsupportedConstruct("COUNT needs a one-parameter set", span=t.span)
            block = self.block(list(lam.params), [lam.body], scope, count_target=lam.params[0].name)
            return CountSub(block, block.select[0][1])
        parts = lookup_parts(t)
        if parts and frame is not None:
            attr, subject, index = parts
            decl = self.schema.attribute(attr.name)
            if decl.shape in ("node_props", "edge_plain", "edge_single"):
                scan = self._attr_scan(decl, t.span)
                frame.scans.append(scan)
                self._bind_or_cond(subject, Col(scan.alias, SUBJECT), frame)
                values = scan.columns[1:]
                if index is None:
                    if len(values) != 1:
                        raise UnsupportedConstruct(f"whole-tuple value of {decl.name}", span=t.span)
                    return Col(scan.alias, values[0])
                return Col(scan.alias, values[index - 1])
        raise UnsupportedConstruct(f"cannot translate {type(t).__name__} here", span=t.span)

    def cond(self, c: Term, scope: dict):
        if isinstance(c, Const) and isinstance(c.value, bool):
            return BoolC(c.value)
        if isinstance(c, And):
            return AndC(tuple(self.cond(a, scope) for a in c.args))
        if isinstance(c, Or):
            return OrC(tuple(self.cond(a, scope) for a in c.args))
        if isinstance(c, Not):
            return NotC(self.cond(c.arg, scope))
        if isinstance(c, Implies):
            return OrC((NotC(self.cond(c.lhs, scope)), self.cond(c.rhs, scope)))
        if isinstance(c, Exists):
            return ExistsC(self.block([c.var], [c.body], scope))
        if isinstance(c, Forall):
            body = c.body
            items = [body.lhs, Not(body.rhs)] if isinstance(body, Implies) else [Not(body)]
            return NotC(ExistsC(self.block([c.var], items, scope)))
        if isinstance(c, Compare):
            if has_lookup(c, self.schema):
                return ExistsC(self.block([], [c], scope))
            return Cmp(c.op, self.operand(c.lhs, scope), self.operand(c.rhs, scope))
        if atom_parts(c, self.schema):
            return ExistsC(self.block([], [c], scope))
        raise UnsupportedConstruct(f"cannot translate {type(c).__name__} as a condition", span=c.span)


def _first_occurrence(name: str, items: list, schema: Schema):
    """First ``(decl, column)`` where ``name`` is a direct atom argument."""

    def visit(t: Term, shadowed: bool):
        if shadowed:
            return None
        parts = atom_parts(t, schema)
        if parts:
            decl, subject, args = parts
            cols = decl.column_names()
            if subject is not None:
                if isinstance(subject, Var) and subject.name == name:
                    return decl, SUBJECT
            for a, col in zip(args, cols):
                if isinstance(a, Var) and a.name == name:
                    return decl, col
        bound = {v.name for v in (t.params if isinstance(t, Lambda) else (t.var,) if isinstance(t, (Exists, Forall)) else ())}
        for ch in t.children():
            got = visit(ch, name in bound)
            if got:
                return got
        return None

    for it in items:
        got = visit(it, False)
        if got:
            return got
    return None


__all__ = [
    "AndC",
    "ArithOp",
    "Block",
    "BoolC",
    "Cmp",
    "Col",
    "Compiler",
    "CountSub",
    "ExistsC",
    "Lit",
    "NotC",
    "OrC",
    "Scan",
    "SUBJECT",
    "atom_parts",
    "domain_table",
    "has_lookup",
    "lookup_parts",
    "normalize",
]
