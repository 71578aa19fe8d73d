"""Command-line front end.

Batch mode chains commands in one invocation, each applied to the same
session in order::

    lambdaq load-schema s.txt load-graph g.txt load-rel Movies m.csv \\
        query -e "{t^Title | ...}"

``--fixture movies-small`` preloads the bundled sample instead.  ``repl``
reads the same commands from standard input, one per line; a line that is
not a command is run as a query.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import LambdaqError, SessionError
from .evaluator import Relation, eval_query
from .fixtures import FIXTURES, load_fixture
from .parser import parse_query
from .schema import Schema, load_mediation_text, load_schema_text
from .store import GraphStore, RelStore, Stores, load_graph_lines, load_relation_csv
from .translate import execute_plan, plan_federated, render_plan, to_cypher, to_sql

COMMANDS = ("load-schema", "load-graph", "load-rel", "load-mediation", "query", "translate", "repl")


@dataclass
class Session:
    schema: Schema | None = None
    stores: Stores = field(default_factory=lambda: Stores(GraphStore(), RelStore()))
    syntax: str = "friendly"
    output: str = "table"
    via: str = "eval"
    max_domain: int | None = None

    def require_schema(self) -> Schema:
        if self.schema is None:
            raise SessionError("no schema loaded")
        return self.schema


# -- rendering --------------------------------------------------------------------------


def render_relation(rel: Relation, fmt: str = "table") -> str:
    columns = list(rel.columns)
    rows = rel.rendered_rows()
    if fmt == "json":
        return json.dumps({"columns": columns, "rows": [list(r) for r in rows]})
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
        return buf.getvalue().rstrip("\n")
    widths = [max([len(c), *(len(r[i]) for r in rows)]) for i, c in enumerate(columns)]
    lines = [
        " | ".join(c.ljust(w) for c, w in zip(columns, widths)),
        "-+-".join("-" * w for w in widths),
    ]
    lines += [" | ".join(v.ljust(w) for v, w in zip(r, widths)) for r in rows]
    noun = "row" if len(rows) == 1 else "rows"
    lines.append(f"({len(rows)} {noun})")
    return "\n".join(line.rstrip() for line in lines)


# -- commands -----------------------------------------------------------------------------


def cmd_query(text: str, session: Session) -> str:
    schema = session.require_schema()
    term = parse_query(text, schema, session.syntax)
    if session.via == "plan":
        rel = execute_plan(plan_federated(term, schema), session.stores, schema, max_domain=session.max_domain)
    else:
        rel = eval_query(term, session.stores, schema, max_domain=session.max_domain)
    return render_relation(rel, session.output)


def cmd_translate(text: str, target: str, session: Session) -> str:
    schema = session.require_schema()
    term = parse_query(text, schema, session.syntax)
    if target == "sql":
        return to_sql(term, schema)
    if target == "cypher":
        return to_cypher(term, schema)
    if target == "plan":
        return render_plan(plan_federated(term, schema))
    raise SessionError(f"unknown translation target {target!r}")


def load_schema(path: str, session: Session) -> str:
    session.schema = load_schema_text(Path(path).read_text(encoding="utf-8"))
    session.stores = Stores(GraphStore(), RelStore())
    return f"schema loaded: {len(session.schema.attributes)} attributes"


def load_graph(path: str, session: Session) -> str:
    schema = session.require_schema()
    load_graph_lines(Path(path).read_text(encoding="utf-8"), schema, session.stores.graph)
    count = sum(len(ids) for ids in session.stores.graph.entities.values())
    return f"graph loaded: {count} nodes"


def load_rel(name: str, path: str, session: Session) -> str:
    schema = session.require_schema()
    load_relation_csv(name, Path(path).read_text(encoding="utf-8"), schema, session.stores.rel)
    return f"{name} loaded: {len(session.stores.rel.rows(schema, name))} rows"


def load_mediation(path: str, session: Session) -> str:
    load_mediation_text(Path(path).read_text(encoding="utf-8"), session.require_schema())
    return "mediation loaded"


def use_fixture(name: str, session: Session) -> None:
    session.schema, session.stores = load_fixture(name)


# -- argument handling ----------------------------------------------------------------------


class _ArgParser(argparse.ArgumentParser):
    """Reports bad arguments as session errors instead of exiting."""

    def error(self, message):
        raise SessionError(f"{self.prog}: {message}")


def _query_options(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("-e", dest="expr", metavar="TEXT", help="query text")
    src.add_argument("--file", metavar="PATH", help="read the query text from a file")
    p.add_argument("text", nargs="?", help="query text (alternative to -e)")
    p.add_argument("--syntax", choices=("raw", "friendly"))


def _parsers() -> dict[str, argparse.ArgumentParser]:
    ps = {}
    for name in COMMANDS:
        ps[name] = _ArgParser(prog=f"lambdaq {name}", add_help=False)
    ps["load-schema"].add_argument("path")
    ps["load-graph"].add_argument("path")
    ps["load-rel"].add_argument("name")
    ps["load-rel"].add_argument("path")
    ps["load-mediation"].add_argument("path")
    _query_options(ps["query"])
    ps["query"].add_argument("--output", choices=("table", "csv", "json"))
    ps["query"].add_argument("--via", choices=("eval", "plan"))
    ps["query"].add_argument("--max-domain", type=int)
    _query_options(ps["translate"])
    ps["translate"].add_argument("--target", choices=("sql", "cypher", "plan"), default="sql")
    return ps


def global_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="lambdaq",
        description="Typed lambda-term queries over a graph store and a relational store.",
        epilog="commands: " + ", ".join(COMMANDS),
    )
    p.add_argument("--fixture", choices=sorted(FIXTURES), help="preload a bundled dataset")
    p.add_argument("--syntax", choices=("raw", "friendly"), default="friendly")
    p.add_argument("--output", choices=("table", "csv", "json"), default="table")
    p.add_argument("--via", choices=("eval", "plan"), default="eval")
    p.add_argument("--max-domain", type=int, default=None)
    return p


def split_commands(argv: list[str]) -> tuple[list[str], list[list[str]]]:
    """Split argv into global options and per-command segments."""
    head: list[str] = []
    segments: list[list[str]] = []
    for arg in argv:
        if arg in COMMANDS and (not segments or segments[-1] and segments[-1][-1] not in ("-e", "--file")):
            segments.append([arg])
        elif segments:
            segments[-1].append(arg)
        else:
            head.append(arg)
    return head, segments


def _query_text(ns) -> str:
    if ns.file:
        return Path(ns.file).read_text(encoding="utf-8")
    text = ns.expr if ns.expr is not None else ns.text
    if text is None:
        raise SessionError("no query text given (use -e TEXT or --file PATH)")
    return text


def run_command(words: list[str], session: Session, parsers=None) -> str | None:
    parsers = parsers or _parsers()
    name, rest = words[0], words[1:]
    ns = parsers[name].parse_args(rest)
    if name == "load-schema":
        return load_schema(ns.path, session)
    if name == "load-graph":
        return load_graph(ns.path, session)
    if name == "load-rel":
        return load_rel(ns.name, ns.path, session)
    if name == "load-mediation":
        return load_mediation(ns.path, session)
    if name == "repl":
        return None
    saved = (session.syntax, session.output, session.via, session.max_domain)
    try:
        session.syntax = ns.syntax or session.syntax
        if name == "query":
            session.output = ns.output or session.output
            session.via = ns.via or session.via
            if ns.max_domain is not None:
                session.max_domain = ns.max_domain
            return cmd_query(_query_text(ns), session)
        return cmd_translate(_query_text(ns), ns.target, session)
    finally:
        session.syntax, session.output, session.via, session.max_domain = saved


def repl(session: Session, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    interactive = stdin.isatty()
    parsers = _parsers()
    status = 0
    while True:
        if interactive:
            stdout.write("lambdaq> ")
            stdout.flush()
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line in (":q", ":quit", "quit", "exit"):
            break
        try:
            words = shlex.split(line)
            if words[0] not in COMMANDS:
                out = cmd_query(line, session)
            elif words[0] in ("query", "translate") and not any(w.startswith("-") for w in words[1:]):
                body = line.split(None, 1)[1] if len(words) > 1 else ""
                out = cmd_query(body, session) if words[0] == "query" else cmd_translate(body, "sql", session)
            else:
                out = run_command(words, session, parsers)
        except (LambdaqError, OSError, ValueError) as exc:
            print(exc, file=stdout)
            status = 1
            continue
        if out:
            print(out, file=stdout)
    return status


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    head, segments = split_commands(argv)
    opts = global_parser().parse_args(head)
    session = Session(syntax=opts.syntax, output=opts.output, via=opts.via, max_domain=opts.max_domain)
    parsers = _parsers()
    try:
        if opts.fixture:
            use_fixture(opts.fixture, session)
        if not segments:
            global_parser().print_usage(sys.stderr)
            return 2
        for words in segments:
            if words[0] == "repl":
                return repl(session)
            out = run_command(words, session, parsers)
            if out and words[0] in ("query", "translate"):
                print(out)
    except (LambdaqError, OSError) as exc:
        print(exc, file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
