"""Base-type registry, attribute declarations and the mediation layer.

Every attribute is a named typed function and falls into exactly one of six
shapes, determined by its type alone::

    node_props        ((S1, ..., Sm): R)  or  (S: R)       m >= 1
    edge_plain        (R2: R1)
    edge_plain_multi  ((Bool: R2): R1)
    edge_single       ((S1, ..., Sm, R2): R1)              m >= 0
    edge_multi        ((Bool: S1, ..., Sm, R2): R1)        m >= 1
    relation          (Bool: S1, ..., Sn)                  n >= 1

where ``R*`` are entity bases and ``S*`` descriptive bases.  Relations live in
the relational source; the other five shapes live in the graph.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .core import BOOL, Base, BaseType, Func, TupleT, TypeExpr, base_names, parse_type, render_type
from .errors import (
    DuplicateName,
    LambdaqError,
    MediationError,
    NoShapeMatch,
    SchemaError,
    SourceShapeMismatch,
    UnknownBase,
    UnknownName,
)

SHAPES = ("node_props", "edge_single", "edge_multi", "edge_plain", "edge_plain_multi", "relation")
GRAPH_SHAPES = frozenset(SHAPES) - {"relation"}
BOOL_RESULT_SHAPES = frozenset({"edge_multi", "edge_plain_multi", "relation"})
SOURCES = ("graph", "relational")

BUILTIN_BASES = {
    "Bool": BaseType("Bool", "descriptive", "Bool"),
    "Number": BaseType("Number", "descriptive", "Number"),
}


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    type: Func
    source: str
    shape: str

    @property
    def subject(self) -> str | None:
        """Entity type the attribute is a function of (graph shapes only)."""
        if self.shape == "relation":
            return None
        return self.type.args[0].name

    def components(self) -> tuple[TypeExpr, ...]:
        """Bases of the stored columns after the subject entity.

        For graph shapes these are the per-subject value components (the
        tuple members, the membership arguments, or the single result); for
        relations, the relation's columns.
        """
        t = self.type
        if self.shape == "relation":
            return t.args
        if self.shape in ("edge_multi", "edge_plain_multi"):
            return t.result.args
        if isinstance(t.result, TupleT):
            return t.result.components
        return (t.result,)

    def column_names(self) -> tuple[str, ...]:
        """Base names of :meth:`components`, suffixed ``_2``, ``_3`` on repeats."""
        seen: dict[str, int] = {}
        out = []
        for c in self.components():
            seen[c.name] = seen.get(c.name, 0) + 1
            out.append(c.name if seen[c.name] == 1 else f"{c.name}_{seen[c.name]}")
        return tuple(out)


@dataclass
class MediationMap:
    type_aliases: list[tuple[str, str]] = field(default_factory=list)
    attr_renames: dict[str, str] = field(default_factory=dict)


@dataclass
class Schema:
    bases: dict[str, BaseType] = field(default_factory=lambda: dict(BUILTIN_BASES))
    attributes: dict[str, AttributeDecl] = field(default_factory=dict)
    mediation: MediationMap = field(default_factory=MediationMap)

    # -- bases ---------------------------------------------------------

    def declare_base(self, name: str, kind: str, carrier: str | None = None) -> BaseType:
        bt = BaseType(name, kind, carrier)
        existing = self.bases.get(name)
        if existing is not None:
            if name in BUILTIN_BASES and existing == bt:
                return existing
            raise DuplicateName(f"base type {name!r} declared twice")
        self.bases[name] = bt
        return bt

    def base(self, name: str) -> BaseType:
        try:
            return self.bases[name]
        except KeyError:
            raise UnknownBase(f"unknown base type {name!r}") from None

    def is_entity(self, t: TypeExpr) -> bool:
        return isinstance(t, Base) and t.name in self.bases and self.bases[t.name].is_entity

    def is_descriptive(self, t: TypeExpr) -> bool:
        return isinstance(t, Base) and t.name in self.bases and not self.bases[t.name].is_entity

    def carrier(self, t: TypeExpr) -> str | None:
        if not isinstance(t, Base):
            return None
        return self.base(t.name).carrier

    # -- attributes ----------------------------------------------------

    def classify_attribute(self, t: TypeExpr) -> str:
        return classify_attribute(t, self)

    def declare_attribute(self, name: str, t: TypeExpr, source: str | None = None) -> AttributeDecl:
        """Register an attribute; ``source`` defaults to the one its shape implies."""
        if name in self.attributes or name in self.mediation.attr_renames:
            raise DuplicateName(f"attribute {name!r} declared twice")
        for b in base_names(t):
            self.base(b)
        shape = classify_attribute(t, self)
        if source is None:
            source = "relational" if shape == "relation" else "graph"
        if source not in SOURCES:
            raise SchemaError(f"unknown source {source!r}")
        if (source == "relational") != (shape == "relation"):
            raise SourceShapeMismatch(f"attribute {name!r} of shape {shape} cannot live in the {source} source")
        decl = AttributeDecl(name, t, source, shape)
        if shape != "relation":
            cols = [c.name for c in decl.components() if self.is_descriptive(c)]
            if len(cols) != len(set(cols)):
                raise SchemaError(f"graph attribute {name!r} repeats a property type; properties are keyed by type")
        if shape == "node_props":
            for other in self.attributes.values():
                if other.shape == "node_props" and other.subject == decl.subject:
                    raise SchemaError(
                        f"entity type {decl.subject} already has node properties {other.name!r}"
                    )
        self.attributes[name] = decl
        return decl

    def attribute(self, name: str) -> AttributeDecl:
        decl = self.resolve_name(name)
        if not isinstance(decl, AttributeDecl):
            raise UnknownName(f"{name!r} is a base type, not an attribute")
        return decl

    def node_props_of(self, entity: str) -> AttributeDecl | None:
        for decl in self.attributes.values():
            if decl.shape == "node_props" and decl.subject == entity:
                return decl
        return None

    # -- mediation -----------------------------------------------------

    def add_alias(self, a: str, b: str) -> None:
        ba, bb = self.base(a), self.base(b)
        if ba.is_entity or bb.is_entity:
            raise MediationError(f"alias {a} ~ {b}: only descriptive types can be aliased")
        if ba.carrier != bb.carrier:
            raise MediationError(f"alias {a} ~ {b}: carriers {ba.carrier} and {bb.carrier} differ")
        if (a, b) not in self.mediation.type_aliases:
            self.mediation.type_aliases.append((a, b))

    def add_rename(self, external: str, canonical: str) -> None:
        if external in self.attributes:
            raise MediationError(f"rename {external} -> {canonical}: {external!r} is already an attribute")
        if external in self.mediation.attr_renames:
            raise DuplicateName(f"rename {external!r} given twice")
        if canonical in self.mediation.attr_renames.values():
            raise MediationError(f"rename {external} -> {canonical}: renaming must be injective")
        if canonical not in self.attributes:
            raise UnknownName(f"rename target {canonical!r} is not a declared attribute")
        self.mediation.attr_renames[external] = canonical

    def alias_class(self, name: str) -> frozenset[str]:
        """All bases transitively aliased with ``name`` (including itself)."""
        members = {name}
        changed = True
        while changed:
            changed = False
            for a, b in self.mediation.type_aliases:
                if (a in members) != (b in members):
                    members |= {a, b}
                    changed = True
        return frozenset(members)

    def comparable(self, a: TypeExpr, b: TypeExpr) -> bool:
        """Same type, or descriptive bases joined by an alias."""
        if a == b:
            return True
        return isinstance(a, Base) and isinstance(b, Base) and b.name in self.alias_class(a.name)

    def resolve_name(self, name: str) -> AttributeDecl | BaseType:
        canonical = self.mediation.attr_renames.get(name, name)
        if canonical in self.attributes:
            return self.attributes[canonical]
        if name in self.bases:
            return self.bases[name]
        raise UnknownName(f"unknown name {name!r}")

    def render(self) -> str:
        return render_schema(self)


def classify_attribute(t: TypeExpr, schema: Schema) -> str:
    def entity(x: TypeExpr) -> bool:
        return schema.is_entity(x)

    def desc(x: TypeExpr) -> bool:
        return schema.is_descriptive(x)

    if not isinstance(t, Func):
        raise NoShapeMatch(f"{render_type(t)} is not a functional type")
    if t.result == BOOL and all(desc(a) for a in t.args):
        return "relation"
    if len(t.args) == 1 and entity(t.args[0]):
        r = t.result
        if entity(r):
            return "edge_plain"
        if desc(r):
            return "node_props"
        if isinstance(r, TupleT):
            comps = r.components
            if all(desc(c) for c in comps):
                return "node_props"
            if entity(comps[-1]) and all(desc(c) for c in comps[:-1]):
                return "edge_single"
        if isinstance(r, Func) and r.result == BOOL:
            inner = r.args
            if len(inner) == 1 and entity(inner[0]):
                return "edge_plain_multi"
            if len(inner) >= 2 and entity(inner[-1]) and all(desc(c) for c in inner[:-1]):
                return "edge_multi"
    raise NoShapeMatch(f"type {render_type(t)} matches no attribute shape")


_BASE_LINE = re.compile(r"^(entity)\s+(\w+)$|^(descriptive)\s+(\w+)\s*:\s*(\w+)$")
_ATTR_LINE = re.compile(r"^(\w+)\s*/\s*(.+?)(?:\s+@(\w+))?$")
_ALIAS_LINE = re.compile(r"^alias\s+(\w+)\s*~\s*(\w+)$")
_RENAME_LINE = re.compile(r"^rename\s+(\w+)\s*->\s*(\w+)$")


def load_schema_text(text: str, schema: Schema | None = None) -> Schema:
    """Read the line-oriented schema format into a (new or given) Schema."""
    schema = schema if schema is not None else Schema()
    pending_renames = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if m := _BASE_LINE.match(line):
                if m.group(1):
                    schema.declare_base(m.group(2), "entity")
                else:
                    carrier = m.group(5)
                    if carrier not in ("String", "Number", "Bool", "Date"):
                        raise SchemaError(f"unknown carrier {carrier!r}")
                    schema.declare_base(m.group(4), "descriptive", carrier)
            elif m := _ALIAS_LINE.match(line):
                schema.add_alias(m.group(1), m.group(2))
            elif m := _RENAME_LINE.match(line):
                pending_renames.append((lineno, m.group(1), m.group(2)))
            elif m := _ATTR_LINE.match(line):
                t = parse_type(m.group(2), schema.bases)
                schema.declare_attribute(m.group(1), t, m.group(3))
            else:
                raise SchemaError(f"cannot read schema line {line!r}")
        except LambdaqError as exc:
            exc.line = lineno
            raise
    for lineno, external, canonical in pending_renames:
        try:
            schema.add_rename(external, canonical)
        except LambdaqError as exc:
            exc.line = lineno
            raise
    return schema


def load_mediation_text(text: str, schema: Schema) -> Schema:
    """Apply ``alias`` and ``rename`` lines to an already loaded schema."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if m := _ALIAS_LINE.match(line):
                schema.add_alias(m.group(1), m.group(2))
            elif m := _RENAME_LINE.match(line):
                schema.add_rename(m.group(1), m.group(2))
            else:
                raise MediationError(f"cannot read mediation line {line!r}")
        except LambdaqError as exc:
            exc.line = lineno
            raise
    return schema


def render_schema(schema: Schema) -> str:
    lines = []
    for bt in schema.bases.values():
        if bt.name in BUILTIN_BASES:
            continue
        if bt.is_entity:
            lines.append(f"entity {bt.name}")
        else:
            lines.append(f"descriptive {bt.name}: {bt.carrier}")
    for decl in schema.attributes.values():
        lines.append(f"{decl.name}/{render_type(decl.type)} @{decl.source}")
    for a, b in schema.mediation.type_aliases:
        lines.append(f"alias {a} ~ {b}")
    for external, canonical in schema.mediation.attr_renames.items():
        lines.append(f"rename {external} -> {canonical}")
    return "\n".join(lines) + ("\n" if lines else "")
