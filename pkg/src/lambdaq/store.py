"""Embedded stores: attributes realized as finite partial functions.

``GraphStore`` holds the entity-ID sets and one finite mapping per graph
attribute; ``RelStore`` holds one tuple set per relation.  Both are filled
by loaders (or the ``add_*`` methods) and treated as read-only afterwards.
"""

from __future__ import annotations

import csv
import io
import json
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field

from .core import UNDEF, EntityId, TupleT, carrier_accepts, parse_scalar, validate_value
from .errors import (
    HeaderMismatch,
    LambdaqError,
    ShapeError,
    StoreError,
    TypeMismatch,
    UnknownAttribute,
    UnknownBase,
    UnknownEntityType,
)
from .schema import BOOL_RESULT_SHAPES, AttributeDecl, Schema


@dataclass
class GraphStore:
    entities: dict[str, set[EntityId]] = field(default_factory=dict)
    # single-valued shapes: subject -> value; multivalued shapes: subject -> set of elements
    instances: dict[str, dict[EntityId, object]] = field(default_factory=dict)

    def add_node(self, schema: Schema, entity_type: str, node_id: str) -> EntityId:
        bt = schema.bases.get(entity_type)
        if bt is None or not bt.is_entity:
            raise UnknownEntityType(f"unknown entity type {entity_type!r}")
        eid = EntityId(entity_type, node_id)
        self.entities.setdefault(entity_type, set()).add(eid)
        return eid

    def _require_node(self, eid: EntityId) -> None:
        if eid not in self.entities.get(eid.type, ()):
            raise UnknownEntityType(f"unknown {eid.type} node {eid.id!r}")

    def set_value(self, schema: Schema, attr: str, subject: EntityId, value: object) -> None:
        """Assign a single-valued attribute (later assignments overwrite)."""
        decl = _graph_attr(schema, attr)
        if decl.shape in BOOL_RESULT_SHAPES:
            raise ShapeError(f"{attr} is multivalued; use add_member")
        self._check(schema, decl, subject, value, decl.type.result)
        self.instances.setdefault(decl.name, {})[subject] = value

    def add_member(self, schema: Schema, attr: str, subject: EntityId, element: object) -> None:
        decl = _graph_attr(schema, attr)
        if decl.shape not in BOOL_RESULT_SHAPES:
            raise ShapeError(f"{attr} is single-valued; use set_value")
        inner = decl.type.result.args
        elem_type = inner[0] if len(inner) == 1 else TupleT(inner)
        self._check(schema, decl, subject, element, elem_type)
        self.instances.setdefault(decl.name, {}).setdefault(subject, set()).add(element)

    def _check(self, schema, decl, subject, value, value_type) -> None:
        if not validate_value(subject, decl.type.args[0], schema):
            raise TypeMismatch(f"{decl.name}: subject {subject!r} is not a {decl.subject}")
        self._require_node(subject)
        if not validate_value(value, value_type, schema):
            raise TypeMismatch(f"{decl.name}: value {value!r} does not inhabit the declared type")
        for v in (value if isinstance(value, tuple) else (value,)):
            if isinstance(v, EntityId):
                self._require_node(v)

    def lookup_single(self, schema: Schema, attr: str, subject: object) -> object:
        decl = _graph_attr(schema, attr)
        if decl.shape in BOOL_RESULT_SHAPES:
            raise ShapeError(f"{attr} has a Bool-result shape; use test_membership")
        if not validate_value(subject, decl.type.args[0], schema):
            raise TypeMismatch(f"{attr} applied to {subject!r}")
        return self.instances.get(decl.name, {}).get(subject, UNDEF)

    def members(self, schema: Schema, attr: str, subject: object) -> frozenset:
        """The set a multivalued attribute assigns to ``subject`` (empty if none)."""
        decl = _graph_attr(schema, attr)
        if decl.shape not in BOOL_RESULT_SHAPES:
            raise ShapeError(f"{attr} is single-valued")
        return frozenset(self.instances.get(decl.name, {}).get(subject, ()))

    def rows(self, schema: Schema, attr: str) -> Iterator[tuple]:
        """Flat rows ``(subject, component, ...)`` of a graph attribute."""
        decl = _graph_attr(schema, attr)
        for subject, value in self.instances.get(decl.name, {}).items():
            if decl.shape in BOOL_RESULT_SHAPES:
                for elem in value:
                    yield (subject, *elem) if isinstance(elem, tuple) else (subject, elem)
            elif isinstance(value, tuple):
                yield (subject, *value)
            else:
                yield (subject, value)


@dataclass
class RelStore:
    relations: dict[str, set[tuple]] = field(default_factory=dict)

    def add(self, schema: Schema, name: str, row: Iterable[object]) -> None:
        decl = _relation(schema, name)
        row = tuple(row)
        if len(row) != len(decl.type.args):
            raise TypeMismatch(f"{decl.name} expects {len(decl.type.args)} columns, got {len(row)}")
        for v, t in zip(row, decl.type.args):
            if not validate_value(v, t, schema):
                raise TypeMismatch(f"{decl.name}: {v!r} is not a {t.name}")
        self.relations.setdefault(decl.name, set()).add(row)

    def rows(self, schema: Schema, name: str) -> set[tuple]:
        return self.relations.get(_relation(schema, name).name, set())


@dataclass
class Stores:
    graph: GraphStore = field(default_factory=GraphStore)
    rel: RelStore = field(default_factory=RelStore)


def _graph_attr(schema: Schema, name: str) -> AttributeDecl:
    try:
        decl = schema.attribute(name)
    except LambdaqError:
        raise UnknownAttribute(f"unknown attribute {name!r}") from None
    if decl.source != "graph":
        raise ShapeError(f"{name} is a relation, not a graph attribute")
    return decl


def _relation(schema: Schema, name: str) -> AttributeDecl:
    try:
        decl = schema.attribute(name)
    except LambdaqError:
        raise UnknownAttribute(f"unknown relation {name!r}") from None
    if decl.shape != "relation":
        raise ShapeError(f"{name} is a graph attribute, not a relation")
    return decl


# -- point access -----------------------------------------------------------

def lookup_single(attr: str, args: tuple, stores: Stores, schema: Schema) -> object:
    if len(args) != 1:
        raise TypeMismatch(f"{attr} takes exactly one argument")
    return stores.graph.lookup_single(schema, attr, args[0])


def test_membership(attr: str, args: tuple, stores: Stores, schema: Schema) -> bool:
    """Closed-world membership of the flat argument tuple."""
    decl = schema.attribute(attr)
    if decl.shape not in BOOL_RESULT_SHAPES:
        raise ShapeError(f"{attr} has no Bool-valued result")
    if any(a is UNDEF for a in args):
        raise TypeMismatch("membership arguments must be defined")
    if decl.shape == "relation":
        return tuple(args) in stores.rel.rows(schema, attr)
    subject, rest = args[0], tuple(args[1:])
    elem = rest[0] if len(rest) == 1 else rest
    return elem in stores.graph.members(schema, attr, subject)


test_membership.__test__ = False  # keep pytest from collecting the name


# -- active domains -----------------------------------------------------------

def domain_index(stores: Stores, schema: Schema) -> dict[str, set]:
    """Values stored under each base, before alias merging."""
    index: dict[str, set] = {name: set() for name in schema.bases}
    for etype, ids in stores.graph.entities.items():
        index.setdefault(etype, set()).update(ids)
    for decl in schema.attributes.values():
        comps = decl.components()
        if decl.shape == "relation":
            for row in stores.rel.relations.get(decl.name, ()):
                for v, t in zip(row, comps):
                    index[t.name].add(v)
            continue
        for row in stores.graph.rows(schema, decl.name):
            for v, t in zip(row[1:], comps):
                if v is not UNDEF:
                    index[t.name].add(v)
    return index


def active_domain(
    base: str,
    extra_constants: Iterable[object],
    stores: Stores,
    schema: Schema,
    index: dict[str, set] | None = None,
) -> frozenset:
    bt = schema.bases.get(base)
    if bt is None:
        raise UnknownBase(f"unknown base type {base!r}")
    if index is None:
        index = domain_index(stores, schema)
    if bt.is_entity:
        return frozenset(stores.graph.entities.get(base, ())) | frozenset(extra_constants)
    out = set(extra_constants)
    for member in schema.alias_class(base):
        out |= index.get(member, set())
    return frozenset(out)


# -- loaders ------------------------------------------------------------------

_NODE_LINE = re.compile(r"^node\s+(\w+)\s+(\S+?)\s*(?:\{(.*)\})?$")
_EDGE_LINE = re.compile(r"^edge\s+(\w+)\s+(\S+)\s*->\s*(\S+?)\s*(?:\{(.*)\})?$")
_PROP = re.compile(
    r'\s*(\w+)\s*:\s*("(?:[^"\\]|\\.)*"|\d{4}-\d{2}-\d{2}|[+-]?\d+(?:\.\d+)?|true|false)\s*(?:,|$)'
)
_DATE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


def _parse_props(text: str | None) -> dict[str, tuple[str, str]]:
    """Map property base -> (literal kind, literal text)."""
    props: dict[str, tuple[str, str]] = {}
    if text is None or not text.strip():
        return props
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _PROP.match(text, pos)
        if not m or m.end() == pos:
            raise StoreError(f"cannot read properties {text[pos:]!r}")
        key, lit = m.group(1), m.group(2)
        if key in props:
            raise StoreError(f"property {key!r} given twice")
        if lit.startswith('"'):
            props[key] = ("string", json.loads(lit))
        elif _DATE.match(lit):
            props[key] = ("date", lit)
        elif lit in ("true", "false"):
            props[key] = ("bool", lit)
        else:
            props[key] = ("number", lit)
        pos = m.end()
    return props


_LITERAL_CARRIER = {"string": "String", "date": "Date", "bool": "Bool", "number": "Number"}


def _literal_value(schema: Schema, base: str, kind: str, text: str) -> object:
    carrier = schema.base(base).carrier
    if carrier is None:
        raise TypeMismatch(f"{base} is an entity type, not a property")
    if kind == "string" and carrier == "Date" and _DATE.match(text):
        kind = "date"
    if _LITERAL_CARRIER[kind] != carrier:
        raise TypeMismatch(f"property {base} expects a {carrier} literal, got {text!r}")
    value = text if kind == "string" else parse_scalar(text, carrier)
    assert carrier_accepts(carrier, value)
    return value


def _props_tuple(schema: Schema, decl: AttributeDecl, props: dict, comps) -> tuple:
    names = [c.name for c in comps]
    unknown = set(props) - set(names)
    if unknown:
        raise TypeMismatch(f"{decl.name} has no property {sorted(unknown)[0]!r}")
    missing = [n for n in names if n not in props]
    if missing:
        raise TypeMismatch(f"{decl.name} is missing property {missing[0]!r}")
    return tuple(_literal_value(schema, n, *props[n]) for n in names)


def load_graph_lines(text: str, schema: Schema, store: GraphStore | None = None) -> GraphStore:
    """Read ``node``/``edge`` lines.  Nodes are registered before any edge."""
    store = store if store is not None else GraphStore()
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip() if not raw.lstrip().startswith("#") else ""
        if line:
            lines.append((lineno, line))
    for lineno, line in lines:
        if not line.startswith("node"):
            continue
        try:
            _load_node(store, schema, line)
        except LambdaqError as exc:
            exc.line = lineno
            raise
    for lineno, line in lines:
        if line.startswith("node"):
            continue
        try:
            _load_edge(store, schema, line)
        except LambdaqError as exc:
            exc.line = lineno
            raise
    return store


def _load_node(store: GraphStore, schema: Schema, line: str) -> None:
    m = _NODE_LINE.match(line)
    if not m:
        raise StoreError(f"cannot read node line {line!r}")
    etype, node_id, body = m.groups()
    eid = store.add_node(schema, etype, node_id)
    props = _parse_props(body)
    if not props:
        return
    decl = schema.node_props_of(etype)
    if decl is None:
        raise UnknownAttribute(f"entity type {etype} has no node properties")
    values = _props_tuple(schema, decl, props, decl.components())
    store.set_value(schema, decl.name, eid, values if isinstance(decl.type.result, TupleT) else values[0])


def _load_edge(store: GraphStore, schema: Schema, line: str) -> None:
    m = _EDGE_LINE.match(line)
    if not m:
        raise StoreError(f"cannot read line {line!r}")
    name, src_id, dst_id, body = m.groups()
    decl = _graph_attr(schema, name)
    if decl.shape == "node_props":
        raise ShapeError(f"{name} holds node properties, not edges")
    comps = decl.components()
    dst_type = comps[-1]
    src = EntityId(decl.subject, src_id)
    dst = EntityId(dst_type.name, dst_id)
    store._require_node(src)
    store._require_node(dst)
    props = _parse_props(body)
    values = _props_tuple(schema, decl, props, comps[:-1])
    if decl.shape == "edge_plain":
        store.set_value(schema, name, src, dst)
    elif decl.shape == "edge_plain_multi":
        store.add_member(schema, name, src, dst)
    elif decl.shape == "edge_single":
        store.set_value(schema, name, src, (*values, dst))
    else:
        store.add_member(schema, name, src, (*values, dst))


def load_relation_csv(name: str, text: str, schema: Schema, store: RelStore | None = None) -> RelStore:
    """Load CSV rows (header = column base names, in declared order)."""
    store = store if store is not None else RelStore()
    decl = _relation(schema, name)
    expected = [t.name for t in decl.type.args]
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != expected:
        raise HeaderMismatch(
            f"{decl.name} header must be {','.join(expected)}, got {','.join(header or [])!r}", line=1
        )
    store.relations.setdefault(decl.name, set())
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(expected):
            raise TypeMismatch(f"row has {len(row)} fields, expected {len(expected)}", line=rowno)
        values = []
        for cell, t in zip(row, decl.type.args):
            try:
                values.append(parse_scalar(cell, schema.base(t.name).carrier))
            except ValueError as exc:
                raise TypeMismatch(f"column {t.name}: {exc}", line=rowno) from None
        store.add(schema, decl.name, values)
    return store


def check_referential_integrity(store: GraphStore, schema: Schema) -> None:
    for name, mapping in store.instances.items():
        decl = schema.attributes[name]
        for subject, value in mapping.items():
            store._require_node(subject)
            elems = value if decl.shape in BOOL_RESULT_SHAPES else [value]
            for e in elems:
                for v in (e if isinstance(e, tuple) else (e,)):
                    if isinstance(v, EntityId):
                        store._require_node(v)
