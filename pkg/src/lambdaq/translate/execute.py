"""Running compiled blocks against the embedded stores.

Graph blocks are interpreted directly over per-attribute tables built from
the graph store (the stand-in for a graph engine).  Relational blocks are
rendered to SQL and handed to an in-memory SQLite database loaded from
the relational store.
"""

from __future__ import annotations

import datetime
import sqlite3
from collections import defaultdict
from decimal import Decimal

from ..core import Base, EntityId
from ..evaluator import Domains
from ..schema import Schema
from ..store import Stores
from .ir import AndC, ArithOp, Block, BoolC, Cmp, Col, CountSub, ExistsC, Lit, NotC, OrC, Scan, domain_table
from .sql import ident, render_sql


# -- in-memory interpretation ----------------------------------------------------------


class TableSource:
    """Rows of every table a block may scan, with lazily built hash indexes."""

    def __init__(self, stores: Stores, schema: Schema, domains: Domains):
        self.stores, self.schema, self.domains = stores, schema, domains
        self._rows: dict[str, list[tuple]] = {}
        self._indexes: dict[tuple[str, tuple[int, ...]], dict] = {}

    def rows(self, scan: Scan) -> list[tuple]:
        got = self._rows.get(scan.table)
        if got is None:
            if scan.is_domain:
                got = [(v,) for v in self.domains.of(Base(scan.base))]
            elif scan.decl.shape == "relation":
                got = sorted(self.stores.rel.rows(self.schema, scan.table), key=repr)
            else:
                got = list(self.stores.graph.rows(self.schema, scan.table))
            self._rows[scan.table] = got
        return got

    def index(self, scan: Scan, positions: tuple[int, ...]) -> dict:
        key = (scan.table, positions)
        idx = self._indexes.get(key)
        if idx is None:
            idx = defaultdict(list)
            for row in self.rows(scan):
                idx[tuple(row[p] for p in positions)].append(row)
            self._indexes[key] = idx
        return idx


def _aliases_in(x, acc: set) -> set:
    """Aliases referenced by an operand or condition, minus those it defines."""
    if isinstance(x, Col):
        acc.add(x.alias)
    elif isinstance(x, (Cmp, ArithOp)):
        _aliases_in(x.lhs, acc)
        _aliases_in(x.rhs, acc)
    elif isinstance(x, NotC):
        _aliases_in(x.arg, acc)
    elif isinstance(x, (AndC, OrC)):
        for a in x.args:
            _aliases_in(a, acc)
    elif isinstance(x, (ExistsC, CountSub)):
        inner: set = set()
        b = x.block
        for c in b.conds:
            _aliases_in(c, inner)
        for _, op in b.select:
            _aliases_in(op, inner)
        if isinstance(x, CountSub):
            _aliases_in(x.target, inner)
        acc |= inner - {s.alias for s in b.scans}
    return acc


class _Schedule:
    """Per-scan lookup keys and the conditions checkable after each scan."""

    def __init__(self, block: Block):
        self.columns = {s.alias: {c: i for i, c in enumerate(s.columns)} for s in block.scans}
        order = {s.alias: i for i, s in enumerate(block.scans)}
        self.keys: list[list[tuple[int, object]]] = [[] for _ in block.scans]
        self.checks: list[list] = [[] for _ in range(len(block.scans) + 1)]
        for c in block.conds:
            refs = _aliases_in(c, set())
            level = max((order[a] + 1 for a in refs if a in order), default=0)
            if isinstance(c, Cmp) and c.op == "=" and level > 0:
                placed = self._as_key(c, order, level)
                if placed:
                    continue
            self.checks[level].append(c)

    def _as_key(self, c: Cmp, order: dict, level: int) -> bool:
        k = level - 1
        for mine, other in ((c.lhs, c.rhs), (c.rhs, c.lhs)):
            if isinstance(mine, Col) and order.get(mine.alias) == k:
                refs = _aliases_in(other, set())
                if all(order.get(a, -1) < k for a in refs):
                    self.keys[k].append((self.columns[mine.alias][mine.column], other))
                    return True
        return False


class Interpreter:
    def __init__(self, tables: TableSource):
        self.tables = tables
        self._schedules: dict[int, _Schedule] = {}
        self._columns: dict[str, dict[str, int]] = {}

    def schedule(self, block: Block) -> _Schedule:
        sch = self._schedules.get(id(block))
        if sch is None:
            sch = self._schedules[id(block)] = _Schedule(block)
            self._columns.update(sch.columns)
        return sch

    def run(self, block: Block, env: dict):
        """Yield every extension of ``env`` (alias -> row) satisfying ``block``."""
        sch = self.schedule(block)
        scans = block.scans

        def go(k: int, env: dict):
            if not all(self.truth(c, env) for c in sch.checks[k]):
                return
            if k == len(scans):
                yield env
                return
            scan = scans[k]
            keys = sch.keys[k]
            if keys:
                positions = tuple(p for p, _ in keys)
                key = tuple(self.value(op, env) for _, op in keys)
                candidates = self.tables.index(scan, positions).get(key, ())
            else:
                candidates = self.tables.rows(scan)
            for row in candidates:
                env[scan.alias] = row
                yield from go(k + 1, env)
            env.pop(scan.alias, None)

        yield from go(0, dict(env))

    def value(self, op, env: dict):
        if isinstance(op, Col):
            return env[op.alias][self._columns[op.alias][op.column]]
        if isinstance(op, Lit):
            return op.value
        if isinstance(op, ArithOp):
            a, b = self.value(op.lhs, env), self.value(op.rhs, env)
            if op.op == "+":
                return a + b
            return a - b if op.op == "-" else a * b
        if isinstance(op, CountSub):
            return len({self.value(op.target, e) for e in self.run(op.block, env)})
        raise TypeError(op)

    def truth(self, c, env: dict) -> bool:
        if isinstance(c, Cmp):
            a, b = self.value(c.lhs, env), self.value(c.rhs, env)
            if c.op == "=":
                return a == b
            if c.op == "<":
                return a < b
            if c.op == "<=":
                return a <= b
            if c.op == ">":
                return a > b
            return a >= b
        if isinstance(c, BoolC):
            return c.value
        if isinstance(c, ExistsC):
            return any(True for _ in self.run(c.block, env))
        if isinstance(c, NotC):
            return not self.truth(c.arg, env)
        if isinstance(c, AndC):
            return all(self.truth(a, env) for a in c.args)
        if isinstance(c, OrC):
            return any(self.truth(a, env) for a in c.args)
        raise TypeError(c)

    def select(self, block: Block) -> set[tuple]:
        ops = [op for _, op in block.select]
        return {tuple(self.value(op, e) for op in ops) for e in self.run(block, {})}


# -- SQLite ---------------------------------------------------------------------------------


def to_sql_value(v: object) -> object:
    """Python value -> SQLite storage value (dates as ISO text, decimals as REAL)."""
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, EntityId):
        return v.id
    if isinstance(v, Decimal):
        return float(v)
    if isinstance(v, datetime.date):
        return v.isoformat()
    return v


def from_sql(v: object, carrier: str | None, entity: str | None = None) -> object:
    """Inverse of :func:`to_sql_value`; ``entity`` names the node type of an ID column."""
    if entity is not None:
        return EntityId(entity, v)
    if carrier == "Date":
        return datetime.date.fromisoformat(v)
    if carrier == "Bool":
        return bool(v)
    if isinstance(v, float):
        return int(v) if v.is_integer() else Decimal(repr(v))
    return v


class SqliteSource:
    """An in-memory SQLite copy of the relational store plus domain tables."""

    def __init__(self, stores: Stores, schema: Schema, domains: Domains):
        self.schema, self.domains = schema, domains
        self.conn = sqlite3.connect(":memory:")
        self._domains_loaded: set[str] = set()
        for decl in schema.attributes.values():
            if decl.shape != "relation":
                continue
            cols = decl.column_names()
            self.conn.execute(f"CREATE TABLE {ident(decl.name)} ({', '.join(ident(c) for c in cols)})")
            marks = ", ".join("?" for _ in cols)
            self.conn.executemany(
                f"INSERT INTO {ident(decl.name)} VALUES ({marks})",
                [tuple(to_sql_value(v) for v in row) for row in stores.rel.rows(schema, decl.name)],
            )

    def ensure_domain(self, base: str) -> None:
        if base in self._domains_loaded:
            return
        self.conn.execute(f"CREATE TABLE {domain_table(base)} (v)")
        self.conn.executemany(
            f"INSERT INTO {domain_table(base)} VALUES (?)",
            [(to_sql_value(v),) for v in self.domains.of(Base(base))],
        )
        self._domains_loaded.add(base)

    def query(self, sql: str, types: list[Base], domains=()) -> set[tuple]:
        for base in sorted(domains):
            self.ensure_domain(base)
        kinds = [(self.schema.carrier(t), t.name if self.schema.is_entity(t) else None) for t in types]
        return {
            tuple(from_sql(v, c, e) for v, (c, e) in zip(row, kinds))
            for row in self.conn.execute(sql)
        }

    def close(self) -> None:
        self.conn.close()


def run_sql_block(block: Block, source: SqliteSource, types: list[Base], domains=()) -> set[tuple]:
    return source.query(render_sql(block), types, domains)


__all__ = [
    "Interpreter",
    "SqliteSource",
    "TableSource",
    "from_sql",
    "run_sql_block",
    "to_sql_value",
]
