"""Metric spectrum tests: state metrics, trace metrics, decorations."""

from __future__ import annotations

import random

import pytest

from helpers import (
    branch_vs_split,
    fig_system,
    finite_a_system,
    pseudo_witness_system,
    random_mts,
)
from ltsmet.core import ONE, ZERO, unit
from ltsmet.lts import make_mts, members
from ltsmet.oracle import trace_hausdorff_oracle
from ltsmet.qualitative import bisimilarity, similarity, trace_equivalent
from ltsmet.quantitative import (
    DECORATED_METRIC_KINDS,
    DirectedMetricTable,
    bet_step,
    bet_step_rows,
    bisim_metric,
    bisim_metric_fixpoint,
    decorated_d0,
    decorated_trace_metric,
    dir_sim_metric,
    dir_trace_metric,
    dir_trace_metric_fixpoint,
    eps_characterization,
    kernel,
    kernel_pairs,
    state_trace_metric_fixpoint,
    trace_metric_fixpoint,
    trace_value_candidates,
)


def test_bisim_metric_reflexive_and_audits():
    m = fig_system()
    table = bisim_metric(m)
    table.audit()
    assert all(table.at(i, i) == ZERO for i in range(m.n_states))


def test_bisim_metric_dominates_trace_distance_on_fig():
    m = fig_system()
    i, j = m.state_index("x"), m.state_index("y")
    d_t = dir_trace_metric(m, 1 << i, 1 << j)
    assert d_t == unit(1, 2)
    assert bisim_metric(m).at(i, j) >= d_t


def test_deadlocked_state_has_zero_directed_distance_to_everything():
    m = make_mts(["d", "s", "t"], ["x"], [("s", "x", "t")])
    table = dir_sim_metric(m)
    table.audit()
    d = m.state_index("d")
    assert all(table.at(d, j) == ZERO for j in range(m.n_states))


def test_dir_sim_below_bisim_metric():
    rng = random.Random(31)
    for _ in range(15):
        m = random_mts(rng, max_states=5)
        sim = dir_sim_metric(m)
        bis = bisim_metric(m)
        for i in range(m.n_states):
            for j in range(m.n_states):
                assert sim.at(i, j) <= bis.at(i, j)


def test_sim_kernel_is_similarity_under_discrete_metric():
    rng = random.Random(32)
    for _ in range(15):
        m = random_mts(rng, max_states=5, metric_style="discrete")
        assert kernel(dir_sim_metric(m)).pairs() == similarity(m).pairs()
        assert kernel(bisim_metric(m)).pairs() == bisimilarity(m).pairs()


def test_fig_bet_step_rows():
    m = fig_system()
    x = m.state_set(["x"])
    y = m.state_set(["y"])
    fix = dir_trace_metric_fixpoint(m, x, y, "brute")
    assert fix.stabilized
    rows = bet_step_rows(m, fix.table, x, y)
    assert sorted((penalty, rest) for _, _, penalty, rest in rows) == sorted(
        [(ONE, ZERO), (unit(1, 2), ONE), (ZERO, ONE), (ZERO, ONE)]
    )
    assert bet_step(m, fix.table, x, y, "brute") == unit(1, 2)
    assert bet_step(m, fix.table, x, y, "threshold") == unit(1, 2)


def test_bet_step_empty_conventions():
    m = fig_system()
    fix = dir_trace_metric_fixpoint(m, m.state_set(["x"]), m.state_set(["y"]))
    assert bet_step(m, fix.table, 0, m.state_set(["y"])) == ZERO
    assert bet_step(m, fix.table, m.state_set(["x"]), 0) == ONE


def test_threshold_equals_brute_on_random_systems():
    rng = random.Random(33)
    for _ in range(25):
        m = random_mts(rng, max_states=5)
        n = m.n_states
        m1 = rng.randrange(1, 1 << n)
        m2 = rng.randrange(1, 1 << n)
        assert dir_trace_metric(m, m1, m2, "threshold") == dir_trace_metric(
            m, m1, m2, "brute"
        )


def test_trace_metric_identity_and_fig_value():
    m = fig_system()
    x = m.state_set(["x"])
    y = m.state_set(["y"])
    assert dir_trace_metric(m, x, x) == ZERO
    assert dir_trace_metric(m, x, y) == unit(1, 2)
    assert dir_trace_metric(m, x, 0) == ONE
    assert dir_trace_metric(m, 0, y) == ZERO


def test_trace_metric_against_bounded_oracle():
    rng = random.Random(34)
    for _ in range(25):
        m = random_mts(rng, max_states=5, acyclic=True)
        n = m.n_states
        m1 = rng.randrange(1, 1 << n)
        m2 = rng.randrange(1, 1 << n)
        depth = m.longest_path()
        assert dir_trace_metric(m, m1, m2) == trace_hausdorff_oracle(
            m, m1, m2, depth, "directed"
        )


def test_powerset_table_join_preservation_and_empty_column():
    m = fig_system()
    x = m.state_set(["x", "xp"])
    y = m.state_set(["y"])
    fix = trace_metric_fixpoint(m, [(s, y) for s in members(x)])
    fix.table.audit()
    assert fix.table.value(x, y) == max(
        fix.table.value(m.state_set(["x"]), y), fix.table.value(m.state_set(["xp"]), y)
    )


def test_iterates_ascend():
    m = fig_system()
    x = m.state_set(["x"])
    y = m.state_set(["y"])
    previous = None
    for bound in range(1, 6):
        fix = dir_trace_metric_fixpoint(m, x, y, max_iter=bound)
        if previous is not None:
            assert all(fix.table.cells[c] >= previous[c] for c in previous)
        previous = dict(fix.table.cells)
        if fix.stabilized:
            break
    assert fix.stabilized


def test_decorated_d0_kinds():
    rng = random.Random(35)
    m = branch_vs_split()
    for kind in DECORATED_METRIC_KINDS:
        table = decorated_d0(m, kind)
        table.audit()
        assert all(table.at(i, i) == ZERO for i in range(m.n_states))
    failure = decorated_d0(m, "failure_discrete")
    for i in range(m.n_states):
        for j in range(m.n_states):
            expected = ZERO if m.enabled(j) <= m.enabled(i) else ONE
            assert failure.at(i, j) == expected
    for _ in range(10):
        md = random_mts(rng, max_states=5, metric_style="discrete")
        assert decorated_d0(md, "failure_hausdorff").entries == decorated_d0(
            md, "failure_discrete"
        ).entries


def test_decorated_with_zero_base_is_plain_trace_metric():
    rng = random.Random(36)
    for _ in range(10):
        m = random_mts(rng, max_states=5)
        zero = DirectedMetricTable.zero(tuple(m.states))
        n = m.n_states
        m1 = rng.randrange(1, 1 << n)
        m2 = rng.randrange(1, 1 << n)
        assert decorated_trace_metric(m, m1, m2, zero) == dir_trace_metric(m, m1, m2)


def test_maximal_base_still_gives_zero_self_distance():
    m = make_mts(["p0", "p1"], ["a"], [("p0", "a", "p1")])
    spiked = DirectedMetricTable(
        tuple(m.states),
        ((ZERO, ONE), (ONE, ZERO)),
        symmetric=True,
    )
    p0 = m.state_set(["p0"])
    assert decorated_trace_metric(m, p0, p0, spiked) == ZERO


def test_eps_characterization_on_fig():
    m = fig_system()
    x = m.state_set(["x"])
    y = m.state_set(["y"])
    zero = DirectedMetricTable.zero(tuple(m.states))
    assert eps_characterization(m, x, y, zero, 3) == unit(1, 2)
    assert eps_characterization(m, x, x, zero, 3) == ZERO


def test_decorated_metric_equals_eps_characterization():
    rng = random.Random(37)
    for _ in range(10):
        m = random_mts(rng, max_states=5, acyclic=True)
        n = m.n_states
        depth = m.longest_path()
        m1 = rng.randrange(1, 1 << n)
        m2 = rng.randrange(1, 1 << n)
        for kind in DECORATED_METRIC_KINDS:
            d0 = decorated_d0(m, kind)
            assert decorated_trace_metric(m, m1, m2, d0) == eps_characterization(
                m, m1, m2, d0, depth
            ), kind


def test_trace_kernel_is_trace_equivalence():
    rng = random.Random(38)
    for _ in range(10):
        m = random_mts(rng, max_states=5)
        fix = state_trace_metric_fixpoint(m)
        assert fix.stabilized
        sym = fix.table.symmetrized()
        k = kernel(sym)
        for i in range(m.n_states):
            for j in range(m.n_states):
                assert k.related(i, j) == trace_equivalent(m, 1 << i, 1 << j)


def test_kernel_pairs_on_powerset_table():
    m = fig_system()
    x = m.state_set(["x"])
    fix = dir_trace_metric_fixpoint(m, x, x)
    pairs = kernel_pairs(fix.table)
    assert (x, x) in pairs


def test_spectrum_inequalities_on_singletons():
    rng = random.Random(39)
    chain = (
        "completed",
        "failure_hausdorff",
        "ready_hausdorff",
        "possible_futures",
    )
    side = ("failure_hausdorff", "failure_discrete", "ready_discrete")
    for _ in range(8):
        m = random_mts(rng, max_states=4)
        n = m.n_states
        d0s = {kind: decorated_d0(m, kind) for kind in DECORATED_METRIC_KINDS}
        values = {}
        pairs = [(i, j) for i in range(n) for j in range(n)]
        for i, j in pairs:
            values[("trace", i, j)] = dir_trace_metric(m, 1 << i, 1 << j)
            for kind in DECORATED_METRIC_KINDS:
                values[(kind, i, j)] = decorated_trace_metric(
                    m, 1 << i, 1 << j, d0s[kind]
                )
        for i, j in pairs:
            assert values[("trace", i, j)] <= values[("completed", i, j)]
            for lower, upper in zip(chain, chain[1:]):
                assert values[(lower, i, j)] <= values[(upper, i, j)]
            for lower, upper in zip(side, side[1:]):
                assert values[(lower, i, j)] <= values[(upper, i, j)]
        bis = bisim_metric(m)
        for i, j in pairs:
            sym_pf = max(
                values[("possible_futures", i, j)], values[("possible_futures", j, i)]
            )
            assert sym_pf <= bis.at(i, j)


def test_pseudo_hausdorff_failure_exceeds_bisim_metric_on_witness():
    m = pseudo_witness_system()
    i, j = m.state_index("x"), m.state_index("y")
    d0 = decorated_d0(m, "failure_pseudo_hausdorff")
    dec = decorated_trace_metric(m, 1 << i, 1 << j, d0)
    assert dec > bisim_metric(m).at(i, j)


@pytest.mark.parametrize("k", [2, 4, 8])
def test_finite_alphabet_truncation(k):
    m = finite_a_system(k)
    x1 = m.state_set([f"y{i}" for i in range(1, k + 1)])
    x2 = x1 | m.state_set(["x"])
    sym = max(dir_trace_metric(m, x1, x2), dir_trace_metric(m, x2, x1))
    assert sym == unit(1, k)
    assert not trace_equivalent(m, x1, x2)


def test_candidate_set_contains_every_trace_distance():
    rng = random.Random(40)
    for _ in range(10):
        m = random_mts(rng, max_states=4)
        candidates = set(trace_value_candidates(m))
        n = m.n_states
        for i in range(n):
            for j in range(n):
                assert dir_trace_metric(m, 1 << i, 1 << j) in candidates


def test_default_iteration_bound_is_respected():
    rng = random.Random(41)
    for _ in range(10):
        m = random_mts(rng, max_states=5)
        fix = bisim_metric_fixpoint(m)
        assert fix.stabilized
        n = m.n_states
        bound = len(trace_value_candidates(m)) * n * n + 1
        assert fix.iterations <= bound


def test_bisim_metric_on_twin_self_loops_is_zero():
    m = make_mts(["x", "y"], ["a"], [("x", "a", "x"), ("y", "a", "y")])
    table = bisim_metric(m)
    assert all(v == ZERO for row in table.entries for v in row)


def test_threshold_equals_brute_for_decorated_metrics():
    rng = random.Random(42)
    for _ in range(12):
        m = random_mts(rng, max_states=4)
        n = m.n_states
        m1 = rng.randrange(1, 1 << n)
        m2 = rng.randrange(1, 1 << n)
        for kind in DECORATED_METRIC_KINDS:
            d0 = decorated_d0(m, kind)
            assert decorated_trace_metric(m, m1, m2, d0, "threshold") == (
                decorated_trace_metric(m, m1, m2, d0, "brute")
            ), kind
