from pathlib import Path

import pytest

from lambdaq import load_fixture, parse_query

GOLDEN = Path(__file__).parent / "golden"


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8").rstrip("\n")


@pytest.fixture
def movies():
    """Fresh schema and stores of the bundled fixture (tests may mutate them)."""
    return load_fixture()


@pytest.fixture
def schema(movies):
    return movies[0]


@pytest.fixture
def stores(movies):
    return movies[1]


@pytest.fixture
def q(schema):
    def parse(text, syntax="raw"):
        return parse_query(text, schema, syntax)

    return parse


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance lines at the end of the run."""
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n][1])
