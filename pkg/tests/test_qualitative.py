"""Bisimilarity, similarity, trace and decorated trace equivalence tests."""

from __future__ import annotations

import random

import pytest

from helpers import branch_vs_split, chain_vs_branch, fig_system, random_mts
from ltsmet.lts import make_mts
from ltsmet.oracle import omega_oracle
from ltsmet.qualitative import (
    DECORATED_KINDS,
    RelationTable,
    all_pairs_relation,
    bisimilarity,
    decorated_base,
    decorated_trace_related,
    reachable_macrostates,
    similarity,
    state_equivalence,
    trace_equivalence_fixpoint,
    trace_equivalent,
    trace_step,
)


def _naive_bisimilarity(m):
    # independent refinement with explicit quantifiers
    related = {(x, y) for x in range(m.n_states) for y in range(m.n_states)}
    while True:
        def ok(x, y):
            fwd = all(
                any(b == a and (x2, y2) in related for b, y2 in m.delta(y))
                for a, x2 in m.delta(x)
            )
            bwd = all(
                any(b == a and (y2, x2) in related for b, x2 in m.delta(x))
                for a, y2 in m.delta(y)
            )
            return fwd and bwd

        refined = {(x, y) for x, y in related if ok(x, y)}
        if refined == related:
            return related
        related = refined


def test_isomorphic_components_are_bisimilar():
    m = make_mts(
        ["a0", "a1", "b0", "b1"],
        ["x"],
        [("a0", "x", "a1"), ("b0", "x", "b1")],
    )
    table = bisimilarity(m)
    table.audit()
    assert table.related_elements("a0", "b0")
    assert table.related_elements("a1", "b1")
    assert not table.related_elements("a0", "a1")


def test_deadlocks_are_mutually_bisimilar():
    m = make_mts(["d1", "d2", "live"], ["x"], [("live", "x", "d1")])
    table = bisimilarity(m)
    assert table.related_elements("d1", "d2")
    assert not table.related_elements("d1", "live")


def test_fig_states_not_bisimilar_and_matches_naive_refinement():
    m = fig_system()
    table = bisimilarity(m)
    assert not table.related_elements("x", "y")
    assert table.pairs() == frozenset(_naive_bisimilarity(m))


def test_bisimilarity_matches_naive_refinement_on_random_systems():
    rng = random.Random(21)
    for _ in range(20):
        m = random_mts(rng, max_states=6)
        assert bisimilarity(m).pairs() == frozenset(_naive_bisimilarity(m))


def test_everything_simulates_a_deadlock():
    m = make_mts(["d", "s", "t"], ["x"], [("s", "x", "t")])
    table = similarity(m)
    table.audit()
    assert all(table.related_elements("d", other) for other in m.states)


def test_similarity_contains_bisimilarity():
    rng = random.Random(22)
    for _ in range(20):
        m = random_mts(rng, max_states=6)
        bis = bisimilarity(m)
        sim = similarity(m)
        sim.audit()
        for i, j in bis.pairs():
            assert sim.related(i, j) and sim.related(j, i)


def test_chain_simulated_by_branch_not_conversely():
    m = chain_vs_branch()
    table = similarity(m)
    assert table.related_elements("p0", "q0")
    assert not table.related_elements("q0", "p0")


def test_trace_step_conventions():
    m = fig_system()
    x = m.state_set(["x"])
    carrier = reachable_macrostates(m, [0, x])
    table = trace_step(m, all_pairs_relation(carrier, "congruence-on-powerset"))
    empty = table.index(0)
    assert table.related(empty, empty)
    assert not table.related(table.index(x), empty)


def test_trace_step_iterates_stay_congruences_on_samples():
    rng = random.Random(23)
    m = random_mts(rng, max_states=4)
    carrier = tuple(range(1 << m.n_states))
    table = all_pairs_relation(carrier, "congruence-on-powerset")
    for _ in range(4):
        table = trace_step(m, table)
        sample = rng.sample(sorted(table.pairs()), min(25, len(table.pairs())))
        table.audit_congruence_sample(sample)


def test_trace_equivalence_basics():
    m = fig_system()
    x = m.state_set(["x"])
    y = m.state_set(["y"])
    assert trace_equivalent(m, x, x)
    assert not trace_equivalent(m, x, y)
    report = trace_equivalence_fixpoint(m, x, y)
    assert report.stabilized


def test_classic_pair_is_trace_equivalent_but_not_bisimilar():
    m = branch_vs_split()
    u = m.state_set(["u0"])
    v = m.state_set(["v0"])
    assert trace_equivalent(m, u, v)
    assert not bisimilarity(m).related_elements("u0", "v0")


def _bounded_trace_sets_equal(m, m1, m2, depth):
    from ltsmet.lts import bounded_traces

    return set(bounded_traces(m, m1, depth)) == set(bounded_traces(m, m2, depth))


def test_trace_equivalence_against_bounded_enumeration():
    rng = random.Random(24)
    for _ in range(25):
        m = random_mts(rng, max_states=5, acyclic=True)
        n = m.n_states
        m1 = rng.randrange(1, 1 << n)
        m2 = rng.randrange(1, 1 << n)
        depth = m.longest_path()
        assert trace_equivalent(m, m1, m2) == _bounded_trace_sets_equal(m, m1, m2, depth)


def test_decorated_base_shapes():
    m = branch_vs_split()
    for kind in DECORATED_KINDS:
        base = decorated_base(m, kind)
        base.audit()
    failure = decorated_base(m, "failure")
    for x in range(m.n_states):
        for y in range(m.n_states):
            assert failure.related(x, y) == (m.enabled(y) <= m.enabled(x))
    ready = decorated_base(m, "ready")
    assert ready.is_symmetric()
    deadlock_free = make_mts(["a", "b"], ["x"], [("a", "x", "b"), ("b", "x", "a")])
    completed = decorated_base(deadlock_free, "completed")
    assert completed.pairs() == frozenset(
        (i, j) for i in range(2) for j in range(2)
    )


def test_total_base_collapses_to_trace_equivalence():
    rng = random.Random(25)
    for _ in range(15):
        m = random_mts(rng, max_states=5)
        total = all_pairs_relation(tuple(m.states), "preorder")
        n = m.n_states
        m1 = rng.randrange(1 << n)
        m2 = rng.randrange(1 << n)
        assert decorated_trace_related(m, m1, m2, total) == trace_equivalent(m, m1, m2)


def test_ready_decoration_distinguishes_classic_pair():
    m = branch_vs_split()
    u = m.state_set(["u0"])
    v = m.state_set(["v0"])
    assert not decorated_trace_related(m, u, v, decorated_base(m, "ready"))
    assert decorated_trace_related(m, u, v, decorated_base(m, "completed"))


def test_decorated_related_matches_omega_oracle():
    rng = random.Random(26)
    for _ in range(20):
        m = random_mts(rng, max_states=5, acyclic=True)
        n = m.n_states
        m1 = rng.randrange(1, 1 << n)
        m2 = rng.randrange(1, 1 << n)
        depth = m.longest_path()
        for kind in DECORATED_KINDS:
            base = decorated_base(m, kind)
            assert decorated_trace_related(m, m1, m2, base) == omega_oracle(
                m, m1, m2, base.related, depth
            )


def test_identity_base_on_deterministic_system():
    # deterministic: along every common trace exactly one state is reached,
    # so the identity decoration forces the reached states to coincide; the
    # empty trace already compares the start sets
    m = make_mts(
        ["a0", "a1", "b0"],
        ["x", "y"],
        [("a0", "x", "a1"), ("b0", "x", "a1"), ("a1", "y", "a0")],
    )
    identity = RelationTable.from_predicate(
        tuple(m.states), lambda x, y: x == y, "equivalence"
    )
    a0 = m.state_set(["a0"])
    b0 = m.state_set(["b0"])
    assert decorated_trace_related(m, a0, a0, identity)
    assert not decorated_trace_related(m, a0, b0, identity)
    assert decorated_trace_related(m, a0, b0, identity) == omega_oracle(
        m, a0, b0, identity.related, 6
    )


def test_qualitative_hierarchy_on_random_systems():
    rng = random.Random(27)
    chain = ("bisim", "possible-futures", "ready", "failure", "completed", "trace")
    for _ in range(10):
        m = random_mts(rng, max_states=5, max_labels=3)
        tables = {sem: state_equivalence(m, sem) for sem in chain}
        n = m.n_states
        for finer, coarser in zip(chain, chain[1:]):
            for i in range(n):
                for j in range(n):
                    if tables[finer].related(i, j):
                        assert tables[coarser].related(i, j), (finer, coarser, i, j)


def test_state_equivalence_rejects_unknown():
    with pytest.raises(ValueError):
        state_equivalence(fig_system(), "nope")


def test_descending_iterates_shrink():
    rng = random.Random(28)
    for _ in range(10):
        m = random_mts(rng, max_states=5)
        table = all_pairs_relation(tuple(m.states), "equivalence")
        from ltsmet.qualitative import bisim_step

        for _ in range(4):
            nxt = bisim_step(m, table)
            assert all(
                nxt.rows[i] & ~table.rows[i] == 0 for i in range(m.n_states)
            )
            table = nxt
