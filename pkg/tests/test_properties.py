"""Randomized properties, 1000 seeded cases each.

Every case builds its own small store (at most five values per base) and
query from ``random.Random(seed)``; a failure message names the seed.
"""

from __future__ import annotations

import itertools
import random

from lambdaq.errors import NotPartitionable
from lambdaq.evaluator import eval_query
from lambdaq.parser import parse_query, render_term
from lambdaq.store import domain_index
from lambdaq.terms import Count, Exists, Forall, Lambda, Not, Var, alpha_equal, map_children, rename_free
from lambdaq.translate import execute_plan, plan_federated

import gen

CASES = 1000
SCHEMA = gen.schema()


def rows(rel):
    return rel.rendered_rows()


def alpha_rename(t, names):
    """Rename every binder in ``t`` to a fresh name drawn from ``names``."""
    if isinstance(t, Lambda):
        new = [Var(next(names), p.type) for p in t.params]
        body = rename_free(t.body, {p.name: n.name for p, n in zip(t.params, new)})
        return Lambda(tuple(new), alpha_rename(body, names))
    if isinstance(t, (Exists, Forall)):
        v = Var(next(names), t.var.type)
        body = rename_free(t.body, {t.var.name: v.name})
        return type(t)(v, alpha_rename(body, names))
    return map_children(t, lambda c: alpha_rename(c, names))


def fresh_names():
    return (f"z{i}" for i in itertools.count())


def random_query(rng):
    g = gen.TermGen(rng, source=rng.choice([None, "graph", "relational"]))
    return g.count_query(2) if rng.random() < 0.2 else g.query(3)


def test_parse_render_is_alpha_identity():
    for seed in range(CASES):
        rng = random.Random(seed)
        t = random_query(rng)
        text = render_term(t)
        back = parse_query(text, SCHEMA, "raw")
        assert alpha_equal(back, t), f"seed {seed}: {text}"
        assert render_term(back) == text, f"seed {seed}"


def test_forall_is_not_exists_not():
    for seed in range(CASES):
        rng = random.Random(seed)
        g = gen.TermGen(rng)
        params = g.params(rng.randint(1, 2))
        x = g.fresh(rng.choice(gen.ENTITIES + gen.DESCRIPTIVE))
        phi = g.formula(params + [x], 2)
        stores = gen.random_stores(rng, SCHEMA)
        universal = Lambda(tuple(params), Forall(x, phi))
        dual = Lambda(tuple(params), Not(Exists(x, Not(phi))))
        assert rows(eval_query(universal, stores, SCHEMA)) == rows(eval_query(dual, stores, SCHEMA)), f"seed {seed}"


def test_evaluation_is_alpha_invariant():
    for seed in range(CASES):
        rng = random.Random(seed)
        t = random_query(rng)
        stores = gen.random_stores(rng, SCHEMA)
        renamed = alpha_rename(t, fresh_names())
        assert alpha_equal(t, renamed), f"seed {seed}"
        assert rows(eval_query(t, stores, SCHEMA)) == rows(eval_query(renamed, stores, SCHEMA)), f"seed {seed}"


def test_federated_plans_agree_with_the_evaluator():
    with_count = nonempty = 0
    for seed in range(CASES):
        rng = random.Random(seed)
        stores = gen.random_stores(rng, SCHEMA)
        t = gen.federated_query(rng)
        with_count += any(isinstance(n, Count) for n in _walk(t))
        expected = rows(eval_query(t, stores, SCHEMA))
        got = rows(execute_plan(plan_federated(t, SCHEMA), stores, SCHEMA))
        assert got == expected, f"seed {seed}: {render_term(t)}"
        nonempty += bool(expected)
    assert with_count >= CASES // 10
    assert nonempty >= CASES // 10


def test_plans_agree_on_general_queries():
    """Arbitrary generated queries; only cross-store disjunctions may be refused."""
    planned = nonempty = 0
    for seed in range(CASES):
        rng = random.Random(seed)
        t = random_query(rng)
        stores = gen.random_stores(rng, SCHEMA)
        try:
            plan = plan_federated(t, SCHEMA)
        except NotPartitionable as exc:
            assert "spans both sources" in exc.message, f"seed {seed}: {exc}"
            continue
        expected = rows(eval_query(t, stores, SCHEMA))
        assert rows(execute_plan(plan, stores, SCHEMA)) == expected, f"seed {seed}: {render_term(t)}"
        planned += 1
        nonempty += bool(expected)
    assert planned >= CASES * 8 // 10
    assert nonempty >= planned // 2


def test_positive_queries_are_monotone():
    grew = 0
    for seed in range(CASES):
        rng = random.Random(seed)
        t = gen.TermGen(rng, positive=True).query(3)
        stores = gen.random_stores(rng, SCHEMA)
        before = set(rows(eval_query(t, stores, SCHEMA)))
        for _ in range(rng.randint(1, 3)):
            gen.insert_random_fact(rng, stores, SCHEMA)
        after = set(rows(eval_query(t, stores, SCHEMA)))
        assert before <= after, f"seed {seed}: {render_term(t)}"
        grew += after != before
    assert grew > 0


def _walk(t):
    yield t
    for c in t.children():
        yield from _walk(c)


def test_generated_stores_stay_small():
    for seed in range(CASES):
        stores = gen.random_stores(random.Random(seed), SCHEMA)
        for base, values in domain_index(stores, SCHEMA).items():
            assert len(values) <= 5, (seed, base)
