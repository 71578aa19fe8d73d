"""SQL text for relational-only queries."""

from __future__ import annotations

import datetime
from decimal import Decimal

from ..schema import Schema
from ..terms import Term
from ..typecheck import check_query
from ..evaluator import analyze_range_restriction, top_conjuncts
from .ir import AndC, ArithOp, Block, BoolC, Cmp, Col, Compiler, CountSub, ExistsC, Lit, NotC, OrC, normalize

# identifiers that must be quoted when used as table or column names
_RESERVED = frozenset(
    """
    ALL AND ANY AS ASC BETWEEN BY CASE CHECK COLUMN CONSTRAINT CREATE CROSS CURRENT_DATE
    DEFAULT DELETE DESC DISTINCT DROP ELSE END ESCAPE EXCEPT EXISTS FALSE FOR FOREIGN
    FROM FULL GROUP HAVING IN INNER INSERT INTERSECT INTO IS JOIN KEY LEFT LIKE LIMIT
    NATURAL NOT NULL ON OR ORDER OUTER PRIMARY REFERENCES RIGHT SELECT SET TABLE THEN
    TO TRUE UNION UNIQUE UPDATE USING VALUES WHEN WHERE WITH
    """.split()
)


def ident(name: str) -> str:
    return f'"{name}"' if name.upper() in _RESERVED else name


def sql_literal(v: object) -> str:
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, (int, Decimal)):
        return str(v)
    if isinstance(v, datetime.date):
        return f"'{v.isoformat()}'"
    return "'" + str(v).replace("'", "''") + "'"


def _operand(op) -> str:
    if isinstance(op, Col):
        return f"{op.alias}.{ident(op.column)}"
    if isinstance(op, Lit):
        return sql_literal(op.value)
    if isinstance(op, ArithOp):
        return f"({_operand(op.lhs)} {op.op} {_operand(op.rhs)})"
    if isinstance(op, CountSub):
        inner = _from_where(op.block)
        return f"(SELECT COUNT(DISTINCT {_operand(op.target)}) {inner})".replace(" )", ")")
    raise TypeError(op)


def _cond(c, top: bool = False) -> str:
    if isinstance(c, Cmp):
        return f"{_operand(c.lhs)} {c.op} {_operand(c.rhs)}"
    if isinstance(c, BoolC):
        return "1 = 1" if c.value else "1 = 0"
    if isinstance(c, ExistsC):
        return f"EXISTS ({_subquery(c.block)})"
    if isinstance(c, NotC):
        if isinstance(c.arg, ExistsC):
            return f"NOT EXISTS ({_subquery(c.arg.block)})"
        return f"NOT ({_cond(c.arg, True)})"
    if isinstance(c, AndC):
        body = " AND ".join(_cond(a) for a in c.args)
        return body if top else f"({body})"
    if isinstance(c, OrC):
        body = " OR ".join(_cond(a) for a in c.args)
        return f"({body})"
    raise TypeError(c)


def _from_where(b: Block) -> str:
    parts = []
    if b.scans:
        parts.append("FROM " + ", ".join(f"{ident(s.table)} {s.alias}" for s in b.scans))
    if b.conds:
        parts.append("WHERE " + " AND ".join(_cond(c) for c in b.conds))
    return " ".join(parts)


def _subquery(b: Block) -> str:
    return f"SELECT 1 {_from_where(b)}".rstrip()


def render_sql(b: Block) -> str:
    cols = ", ".join(_operand(op) for _, op in b.select)
    return f"SELECT DISTINCT {cols} {_from_where(b)}".rstrip()


def compile_sql(t: Term, schema: Schema, mode: str = "first") -> tuple[Block, Compiler]:
    check_query(t, schema)
    t = normalize(t)
    plan = analyze_range_restriction(t, schema)
    derived = {b.var: b.term for b in plan.derived}
    conjuncts = [c for i, c in enumerate(top_conjuncts(t.body)) if i not in {b.conjunct for b in plan.derived}]
    comp = Compiler(schema, "relational", mode)
    return comp.query(t.params, t.body, derived, conjuncts), comp


def to_sql(t: Term, schema: Schema, *, mode: str = "first") -> str:
    """One ``SELECT DISTINCT`` statement for a relational-only query.

    Aliases ``t1, t2, ...`` follow atom order.  With the default mode an
    output variable that no top-level atom guards takes its range from the
    first atom mentioning it; ``mode="domain"`` instead reads it from a
    ``dom_<Base>`` table holding the active domain.
    """
    block, _ = compile_sql(t, schema, mode)
    return render_sql(block)
