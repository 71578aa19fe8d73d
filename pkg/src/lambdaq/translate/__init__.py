"""Translation to SQL and Cypher, and federated execution across both stores."""

from .cypher import to_cypher
from .federate import FederatedPlan, SourcePartition, execute_plan, partition_by_source, plan_federated, render_plan
from .sql import to_sql

__all__ = [
    "FederatedPlan",
    "SourcePartition",
    "execute_plan",
    "partition_by_source",
    "plan_federated",
    "render_plan",
    "to_cypher",
    "to_sql",
]
