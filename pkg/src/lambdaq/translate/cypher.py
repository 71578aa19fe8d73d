"""openCypher text for graph-only queries.

Each graph scan in the IR becomes part of a ``MATCH`` pattern: node
property scans become node patterns, edge scans relationship patterns.
Columns holding entity IDs are node variables, so equalities between them
are expressed by reusing the variable instead of a ``WHERE`` test.
"""

from __future__ import annotations

import datetime
import itertools
from decimal import Decimal

from ..core import EntityId
from ..errors import UnsupportedConstruct
from ..evaluator import analyze_range_restriction, top_conjuncts
from ..schema import Schema
from ..terms import Term, all_var_names
from ..typecheck import check_query
from .ir import SUBJECT, AndC, ArithOp, Block, BoolC, Cmp, Col, Compiler, CountSub, ExistsC, Lit, NotC, OrC, Scan, normalize


def cypher_literal(v: object) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, Decimal)):
        return str(v)
    if isinstance(v, datetime.date):
        return f"date('{v.isoformat()}')"
    if isinstance(v, EntityId):
        return cypher_literal(v.id)
    return "'" + str(v).replace("\\", "\\\\").replace("'", "\\'") + "'"


def _entity_columns(scan: Scan, entity_bases: frozenset) -> tuple[str, ...]:
    """Columns of ``scan`` that hold node IDs."""
    if scan.is_domain:
        return ("v",) if scan.base in entity_bases else ()
    if scan.decl.shape == "node_props":
        return (SUBJECT,)
    return (SUBJECT, scan.columns[-1])


class _Renderer:
    def __init__(self, schema: Schema, reserved: set[str]):
        self.used = set(reserved)
        self.entity_bases = frozenset(n for n, b in schema.bases.items() if b.is_entity)
        self.names: dict[tuple[str, str], str] = {}  # (alias, column) -> variable
        self.owner: dict[str, Scan] = {}
        self.relvars: dict[str, str] = {}
        self._rel = itertools.count(1)
        self._node = itertools.count(1)

    def fresh(self, stem: str, counter) -> str:
        while True:
            name = f"{stem}{next(counter)}"
            if name not in self.used:
                self.used.add(name)
                return name

    def is_node(self, op) -> bool:
        scan = isinstance(op, Col) and self.owner.get(op.alias)
        return bool(scan) and op.column in _entity_columns(scan, self.entity_bases)

    # operands and conditions

    def operand(self, op) -> str:
        if isinstance(op, Col):
            key = (op.alias, op.column)
            if key in self.names:
                return self.names[key]
            scan = self.owner[op.alias]
            if scan.decl.shape == "node_props":
                return f"{self.names[(op.alias, SUBJECT)]}.{op.column}"
            return f"{self.relvars[op.alias]}.{op.column}"
        if isinstance(op, Lit):
            return cypher_literal(op.value)
        if isinstance(op, ArithOp):
            return f"({self.operand(op.lhs)} {op.op} {self.operand(op.rhs)})"
        if isinstance(op, CountSub):
            raise UnsupportedConstruct("COUNT is computed by the mediator, not pushed into Cypher")
        raise TypeError(op)

    def cond(self, c, declared: set) -> str:
        if isinstance(c, Cmp):
            return f"{self.operand(c.lhs)} {c.op} {self.operand(c.rhs)}"
        if isinstance(c, BoolC):
            return "true" if c.value else "false"
        if isinstance(c, ExistsC):
            return f"EXISTS {{ {self.block(c.block, declared)} }}"
        if isinstance(c, NotC):
            if isinstance(c.arg, ExistsC):
                return f"NOT EXISTS {{ {self.block(c.arg.block, declared)} }}"
            return f"NOT ({self.cond(c.arg, declared)})"
        joiner = " AND " if isinstance(c, AndC) else " OR "
        return "(" + joiner.join(self.cond(a, declared) for a in c.args) + ")"

    # blocks

    def _name_nodes(self, b: Block) -> list:
        """Name every node column of ``b``; return the conditions still needed."""
        parent: dict = {}

        def find(k):
            while parent.get(k, k) != k:
                k = parent[k]
            return k

        kept = []
        for c in b.conds:
            if isinstance(c, Cmp) and c.op == "=" and self.is_node(c.lhs) and self.is_node(c.rhs):
                a = find((c.lhs.alias, c.lhs.column))
                z = find((c.rhs.alias, c.rhs.column))
                if a in self.names and z in self.names:
                    kept.append(c)
                elif a != z:
                    if a in self.names:
                        a, z = z, a
                    parent[a] = z
                continue
            kept.append(c)

        preferred = {}
        for name, op in b.bindings:
            if self.is_node(op):
                preferred.setdefault(find((op.alias, op.column)), name)
        for s in b.scans:
            for col in _entity_columns(s, self.entity_bases):
                root = find((s.alias, col))
                if root not in self.names:
                    name = preferred.get(root) or self.fresh("n", self._node)
                    self.used.add(name)
                    self.names[root] = name
                self.names[(s.alias, col)] = self.names[root]
        return kept

    def block(self, b: Block, declared: set, returns: bool = False) -> str:
        declared = set(declared)
        for s in b.scans:
            self.owner[s.alias] = s
        conds = self._name_nodes(b)

        def node(name: str, label: str) -> str:
            if name in declared:
                return f"({name})"
            declared.add(name)
            return f"({name}:{label})"

        unwinds, patterns = [], []
        for s in b.scans:
            if s.is_domain:
                if s.base in self.entity_bases:
                    name = self.names[(s.alias, "v")]
                    if name not in declared:
                        patterns.append(node(name, s.base))
                    continue
                name = next((n for n, op in b.bindings if op == Col(s.alias, "v")), None)
                name = name or self.fresh("v", self._node)
                self.names[(s.alias, "v")] = name
                unwinds.append(f"UNWIND $dom_{s.base} AS {name}")
                continue
            src = self.names[(s.alias, SUBJECT)]
            if s.decl.shape == "node_props":
                if src not in declared:
                    patterns.append(node(src, s.decl.subject))
                continue
            rel = self.fresh("r", self._rel)
            self.relvars[s.alias] = rel
            dst = self.names[(s.alias, s.columns[-1])]
            left = node(src, s.decl.subject)
            right = node(dst, s.decl.components()[-1].name)
            patterns.append(f"{left}-[{rel}:{s.decl.name}]->{right}")

        parts = list(unwinds)
        if patterns:
            parts.append("MATCH " + ", ".join(patterns))
        where = [self.cond(c, declared) for c in conds]
        if where:
            parts.append(("WHERE " if patterns else "WITH * WHERE ") + " AND ".join(where))
        if returns:
            items = []
            for name, op in b.select:
                text = self.operand(op)
                items.append(text if text == name else f"{text} AS {name}")
            parts.append("RETURN DISTINCT " + ", ".join(items))
        return " ".join(parts)


def render_cypher(b: Block, schema: Schema, reserved: set[str] = frozenset()) -> str:
    return _Renderer(schema, set(reserved)).block(b, set(), returns=True)


def compile_graph(t: Term, schema: Schema, mode: str = "first") -> tuple[Block, Compiler]:
    check_query(t, schema)
    t = normalize(t)
    plan = analyze_range_restriction(t, schema)
    if plan.derived:
        raise UnsupportedConstruct("COUNT is computed by the mediator, not pushed into Cypher", span=t.span)
    comp = Compiler(schema, "graph", mode)
    return comp.query(t.params, t.body, {}, top_conjuncts(t.body)), comp


def to_cypher(t: Term, schema: Schema, *, mode: str = "first") -> str:
    """One ``MATCH ... WHERE ... RETURN DISTINCT`` statement for a graph-only query."""
    block, _ = compile_graph(t, schema, mode)
    return render_cypher(block, schema, all_var_names(t))
