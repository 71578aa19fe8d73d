"""Bundled sample datasets."""

from __future__ import annotations

from importlib import resources

from ..schema import Schema, load_mediation_text, load_schema_text
from ..store import GraphStore, RelStore, Stores, load_graph_lines, load_relation_csv

FIXTURES = {"movies-small": "movies_small"}


def fixture_text(name: str, filename: str) -> str:
    pkg = FIXTURES.get(name, name)
    return resources.files(__name__).joinpath(pkg, filename).read_text(encoding="utf-8")


def load_fixture(name: str = "movies-small", *, with_data: bool = True) -> tuple[Schema, Stores]:
    """Schema and populated stores of a bundled fixture.

    ``with_data=False`` returns the same schema with empty stores.
    """
    schema = load_schema_text(fixture_text(name, "schema.txt"))
    stores = Stores(GraphStore(), RelStore())
    if with_data:
        load_graph_lines(fixture_text(name, "graph.txt"), schema, stores.graph)
        for rel in ("Movies", "Actors"):
            load_relation_csv(rel, fixture_text(name, f"{rel}.csv"), schema, stores.rel)
    return schema, stores


def install_film_rename(schema: Schema) -> Schema:
    return load_mediation_text(fixture_text("movies-small", "film_rename.txt"), schema)
