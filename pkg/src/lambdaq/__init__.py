"""lambdaq: typed lambda-term queries over a property graph and a relational store."""

from .core import UNDEF, Base, EntityId, Func, TupleT, parse_type, render_type
from .errors import LambdaqError
from .evaluator import Relation, analyze_range_restriction, eval_query
from .fixtures import load_fixture
from .parser import parse_query, render_term
from .schema import Schema, load_mediation_text, load_schema_text
from .store import GraphStore, RelStore, Stores, load_graph_lines, load_relation_csv
from .translate import execute_plan, partition_by_source, plan_federated, render_plan, to_cypher, to_sql
from .typecheck import check_query

__all__ = [
    "UNDEF",
    "Base",
    "EntityId",
    "Func",
    "GraphStore",
    "LambdaqError",
    "RelStore",
    "Relation",
    "Schema",
    "Stores",
    "TupleT",
    "analyze_range_restriction",
    "check_query",
    "eval_query",
    "execute_plan",
    "load_fixture",
    "load_graph_lines",
    "load_mediation_text",
    "load_relation_csv",
    "load_schema_text",
    "parse_query",
    "parse_type",
    "partition_by_source",
    "plan_federated",
    "render_plan",
    "render_term",
    "render_type",
    "to_cypher",
    "to_sql",
]
