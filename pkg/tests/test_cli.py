import io
import json
import subprocess
import sys

import pytest

from lambdaq.cli import Session, cmd_query, cmd_translate, main, repl, split_commands
from lambdaq.errors import SessionError
from lambdaq.fixtures import load_fixture
from conftest import golden
from oracles import FIXTURE_DIR
from queries import COUNT_FRIENDLY, TITLES_FRIENDLY, TITLES_RAW, DIVISION_RAW

LOADS = [
    "load-schema", str(FIXTURE_DIR / "schema.txt"),
    "load-graph", str(FIXTURE_DIR / "graph.txt"),
    "load-rel", "Movies", str(FIXTURE_DIR / "Movies.csv"),
    "load-rel", "Actors", str(FIXTURE_DIR / "Actors.csv"),
]


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def fixture_session(**kw):
    schema, stores = load_fixture()
    return Session(schema=schema, stores=stores, **kw)


def test_friendly_query_prints_a_two_row_table(capsys):
    code, out, err = run([*LOADS, "query", "-e", TITLES_FRIENDLY, "--syntax", "friendly"], capsys)
    assert code == 0 and err == ""
    lines = out.splitlines()
    assert lines[0].strip() == "t"
    assert [line.strip() for line in lines[2:4]] == ["Jaws", "Lincoln"]
    assert lines[-1] == "(2 rows)"


def test_query_before_schema_is_an_error(capsys):
    code, out, err = run(["query", "-e", TITLES_FRIENDLY], capsys)
    assert code == 1
    assert "no schema loaded" in err


def test_json_of_empty_result(capsys):
    text = "{t^Title | exists m^Movie Movie(m^Movie)(t^Title, 'Nobody'^Director)}"
    code, out, _ = run(["--fixture", "movies-small", "query", "--output", "json", "-e", text], capsys)
    assert code == 0
    assert json.loads(out) == {"columns": ["t"], "rows": []}


def test_csv_output_and_plan_execution(capsys):
    code, out, _ = run(["--fixture", "movies-small", "query", "--via", "plan", "--output", "csv", "-e", COUNT_FRIENDLY], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "u,g,n"
    assert "u3,Drama,0" in lines and "u1,SciFi,1" in lines
    assert lines[1:] == sorted(lines[1:])


@pytest.mark.parametrize(
    "target, text, syntax, expected",
    [
        ("sql", DIVISION_RAW, "raw", "division.sql"),
        ("cypher", TITLES_RAW, "raw", "titles.cypher"),
        ("plan", COUNT_FRIENDLY, "friendly", "count_plan.txt"),
    ],
)
def test_translate_targets(capsys, target, text, syntax, expected):
    code, out, _ = run(["--fixture", "movies-small", "--syntax", syntax, "translate", "--target", target, "-e", text], capsys)
    assert code == 0
    assert out.rstrip("\n") == golden(expected)


def test_translate_errors_are_reported(capsys):
    code, _, err = run(["--fixture", "movies-small", "--syntax", "raw", "translate", "--target", "sql", "-e", TITLES_RAW], capsys)
    assert code == 1
    assert err.startswith("UnsupportedConstruct")


def test_unsafe_query_exit_code(capsys):
    code, _, err = run(["--fixture", "movies-small", "--syntax", "raw", "query", "-e", "lambda n^Number (n = n)"], capsys)
    assert code == 1 and "UnsafeQuery" in err


def test_query_from_file(tmp_path, capsys):
    path = tmp_path / "q.lq"
    path.write_text(TITLES_FRIENDLY)
    code, out, _ = run(["--fixture", "movies-small", "query", "--file", str(path)], capsys)
    assert code == 0 and "Lincoln" in out


def test_max_domain_flag(capsys):
    text = "{a^Name, b^Name, c^Title | a^Name = b^Name}"
    code, _, err = run(["--fixture", "movies-small", "query", "--max-domain", "5", "-e", text], capsys)
    assert code == 1 and "DomainTooLarge" in err


def test_output_is_deterministic(capsys):
    argv = ["--fixture", "movies-small", "query", "-e", COUNT_FRIENDLY]
    first = run(argv, capsys)
    second = run(argv, capsys)
    assert first == second


def test_session_functions():
    session = fixture_session(output="csv")
    assert cmd_query(TITLES_FRIENDLY, session).splitlines() == ["t", "Jaws", "Lincoln"]
    assert cmd_translate(TITLES_FRIENDLY, "cypher", session) == golden("titles.cypher")
    with pytest.raises(SessionError):
        cmd_query(TITLES_FRIENDLY, Session())


def test_split_commands_keeps_query_text_that_looks_like_a_command():
    head, segs = split_commands(["--syntax", "raw", "query", "-e", "query", "translate", "--target", "sql", "-e", "x"])
    assert head == ["--syntax", "raw"]
    assert segs == [["query", "-e", "query"], ["translate", "--target", "sql", "-e", "x"]]


def test_repl_runs_commands_and_queries():
    session = fixture_session()
    stdin = io.StringIO(f"# comment\n{TITLES_FRIENDLY}\ntranslate --target cypher -e \"{TITLES_FRIENDLY}\"\nbogus(\n:quit\n")
    stdout = io.StringIO()
    status = repl(session, stdin, stdout)
    out = stdout.getvalue()
    assert "Lincoln" in out
    assert golden("titles.cypher") in out
    assert "bogus" in out
    assert status == 1


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "lambdaq.cli", "--fixture", "movies-small", "query", "--output", "json", "-e", TITLES_FRIENDLY],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rows"] == [["Jaws"], ["Lincoln"]]
