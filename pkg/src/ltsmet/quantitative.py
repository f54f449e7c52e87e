"""Metric spectrum: bisimulation, directed simulation and directed trace
distances, decorated trace distances and their bounded-trace characterization.

All fixpoints ascend from the zero table and stabilize exactly: each step uses
only min/max over the finite value set generated by the label metric (plus the
endpoint distance, for decorated semantics), so the iterate chain lives in a
finite lattice.  Trace distances are computed on the powerset carrier, but
only on the (singleton, subset) cells actually demanded by the recursion from
the queried pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Mapping

from .core import (
    ONE,
    ZERO,
    FixpointReport,
    UnitValue,
    directed_hausdorff,
    hausdorff,
    join_all,
    kleene_fix,
    meet_all,
    require_stabilized,
)
from .lts import Mts, bounded_traces, lab, members, successors, ter, trace_distance
from .qualitative import RelationTable

__all__ = [
    "DirectedMetricTable",
    "PowersetMetricTable",
    "bisim_metric",
    "bisim_metric_fixpoint",
    "dir_sim_metric",
    "dir_sim_metric_fixpoint",
    "bet_step",
    "bet_step_rows",
    "trace_metric_fixpoint",
    "dir_trace_metric",
    "dir_trace_metric_fixpoint",
    "state_trace_metric_fixpoint",
    "trace_metric_full_fixpoint",
    "decorated_d0",
    "decorated_trace_metric",
    "decorated_trace_metric_fixpoint",
    "eps_characterization",
    "kernel",
    "kernel_pairs",
    "trace_value_candidates",
    "delta_candidates",
    "DECORATED_METRIC_KINDS",
]

DECORATED_METRIC_KINDS = (
    "completed",
    "failure_discrete",
    "failure_hausdorff",
    "failure_pseudo_hausdorff",
    "ready_discrete",
    "ready_hausdorff",
    "possible_futures",
)


@dataclass(frozen=True)
class DirectedMetricTable:
    """UnitValue matrix over states; a hemimetric, symmetric when flagged."""

    states: tuple[str, ...]
    entries: tuple[tuple[UnitValue, ...], ...]
    symmetric: bool = False

    def at(self, i: int, j: int) -> UnitValue:
        return self.entries[i][j]

    def symmetrized(self) -> "DirectedMetricTable":
        n = len(self.states)
        rows = tuple(
            tuple(max(self.entries[i][j], self.entries[j][i]) for j in range(n))
            for i in range(n)
        )
        return DirectedMetricTable(self.states, rows, symmetric=True)

    def audit(self) -> None:
        """Exact hemimetric check: zero diagonal, directed triangle, and
        symmetry when the flag is set.  No tolerance."""
        n = len(self.states)
        for i in range(n):
            if self.entries[i][i] != ZERO:
                raise AssertionError(f"d({self.states[i]}, {self.states[i]}) != 0")
        for i in range(n):
            for j in range(n):
                if self.symmetric and self.entries[i][j] != self.entries[j][i]:
                    raise AssertionError("symmetry flag violated")
                for k in range(n):
                    if self.entries[i][k] > self.entries[i][j].add(self.entries[j][k]):
                        raise AssertionError(
                            "directed triangle inequality violated on "
                            f"({self.states[i]}, {self.states[j]}, {self.states[k]})"
                        )

    @staticmethod
    def zero(states: tuple[str, ...]) -> "DirectedMetricTable":
        n = len(states)
        return DirectedMetricTable(
            states, tuple(tuple(ZERO for _ in range(n)) for _ in range(n)), True
        )


@dataclass(frozen=True, eq=False)
class PowersetMetricTable:
    """Distance table on the powerset carrier, tabulated on demand.

    Rows are singleton first arguments (state index), columns are the state
    sets encountered during the fixpoint; a general first argument is the max
    over its member singletons, which is sound because the table is join
    preserving in its first argument by construction.  The empty column is
    pinned to 1 for every row.
    """

    n_states: int
    cells: Mapping[tuple[int, int], UnitValue]

    def tabulated(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.cells)

    def singleton_value(self, x: int, mask2: int) -> UnitValue:
        try:
            return self.cells[(x, mask2)]
        except KeyError:
            raise KeyError(
                f"cell (state {x}, set {mask2:#x}) was not demanded by this table"
            ) from None

    def value(self, mask1: int, mask2: int) -> UnitValue:
        return join_all(self.singleton_value(x, mask2) for x in members(mask1))

    def audit(self) -> None:
        for (x, mask2), v in self.cells.items():
            if mask2 == 0 and v != ONE:
                raise AssertionError("distance to the empty set must be 1")


def _metric_values(m: Mts, extra: Iterable[UnitValue] = ()) -> frozenset[UnitValue]:
    return frozenset({ZERO, ONE}) | m.label_metric.values() | frozenset(extra)


def _state_metric_step(m: Mts, two_sided: bool):
    deltas = [m.delta(x) for x in range(m.n_states)]
    n = m.n_states

    def step(rows: tuple[tuple[UnitValue, ...], ...]) -> tuple[tuple[UnitValue, ...], ...]:
        def pd(move1: tuple[int, int], move2: tuple[int, int]) -> UnitValue:
            a, x2 = move1
            b, y2 = move2
            return max(m.d_label(a, b), rows[x2][y2])

        new = []
        for x in range(n):
            row = []
            for y in range(n):
                v = directed_hausdorff(pd, deltas[x], deltas[y])
                if two_sided:
                    v = max(v, directed_hausdorff(pd, deltas[y], deltas[x]))
                row.append(v)
            new.append(tuple(row))
        return tuple(new)

    return step


def _state_metric_fixpoint(
    m: Mts, two_sided: bool, max_iter: int | None
) -> FixpointReport:
    n = m.n_states
    bottom = tuple(tuple(ZERO for _ in range(n)) for _ in range(n))
    if max_iter is None:
        max_iter = len(_metric_values(m)) * n * n + 1
    report = kleene_fix(_state_metric_step(m, two_sided), bottom, max_iter)
    table = DirectedMetricTable(tuple(m.states), report.table, symmetric=two_sided)
    return report.with_table(table)


def bisim_metric_fixpoint(m: Mts, max_iter: int | None = None) -> FixpointReport:
    """Least fixpoint of the symmetric Hausdorff step over label/target
    product distances; its kernel under a discrete label metric is
    bisimilarity."""
    return _state_metric_fixpoint(m, two_sided=True, max_iter=max_iter)


def bisim_metric(m: Mts) -> DirectedMetricTable:
    return require_stabilized(bisim_metric_fixpoint(m), "bisimulation metric").table


def dir_sim_metric_fixpoint(m: Mts, max_iter: int | None = None) -> FixpointReport:
    """Least fixpoint of the directed Hausdorff step; d(x, y) says how well y
    simulates x."""
    return _state_metric_fixpoint(m, two_sided=False, max_iter=max_iter)


def dir_sim_metric(m: Mts) -> DirectedMetricTable:
    return require_stabilized(
        dir_sim_metric_fixpoint(m), "directed simulation metric"
    ).table


def delta_candidates(
    m: Mts, a: int, moves: frozenset[tuple[int, int]], strategy: str
) -> list[frozenset[tuple[int, int]]]:
    """Candidate transition sets the opponent may be confined to.

    brute enumerates every subset of the move set; threshold only keeps the
    sets {(b, y) | d_A(a, b) >= t} for t among the occurring distances plus
    the empty set.  The two strategies give the same supremum because the
    tabulated distances are antitone in the second argument.
    """
    if strategy == "brute":
        ordered = sorted(moves)
        out = []
        for size in range(len(ordered) + 1):
            for combo in combinations(ordered, size):
                out.append(frozenset(combo))
        return out
    if strategy == "threshold":
        thresholds = sorted({m.d_label(a, b) for b, _ in moves})
        out = []
        seen = set()
        for t in thresholds:
            delta = frozenset(mv for mv in moves if m.d_label(a, mv[0]) >= t)
            if delta not in seen:
                seen.add(delta)
                out.append(delta)
        if frozenset() not in seen:
            out.append(frozenset())
        return out
    raise ValueError(f"unknown strategy {strategy!r}")


def _bet_cell(
    m: Mts,
    value_of: Callable[[int, int], UnitValue],
    x: int,
    mask2: int,
    strategy: str,
) -> UnitValue:
    """One evaluation of the trace behaviour step at a ({x}, X2) cell with
    nonempty X2."""
    moves2 = successors(m, mask2)
    best = ZERO
    for a, x2 in m.delta(x):
        for delta in delta_candidates(m, a, moves2, strategy):
            penalty = meet_all(m.d_label(a, b) for b in lab(delta))
            if penalty <= best:
                continue
            rest = value_of(x2, ter(moves2 - delta))
            best = max(best, min(penalty, rest))
    return best


def bet_step(
    m: Mts,
    d: PowersetMetricTable,
    mask1: int,
    mask2: int,
    strategy: str = "threshold",
) -> UnitValue:
    """One application of the trace behaviour function at (X1, X2), reading
    inner distances from ``d``; 1 when X2 is empty but X1 is not."""
    if mask1 == 0:
        return ZERO
    if mask2 == 0:
        return ONE
    return join_all(
        _bet_cell(m, d.singleton_value, x, mask2, strategy) for x in members(mask1)
    )


def bet_step_rows(
    m: Mts, d: PowersetMetricTable, mask1: int, mask2: int
) -> list[tuple[tuple[int, int], tuple[tuple[int, int], ...], UnitValue, UnitValue]]:
    """Brute enumeration of the step, one row per ((a, x'), Delta) choice.

    Each row carries the matching penalty (meet of label distances over
    Delta, 1 when Delta is empty) and the tabulated distance of {x'} to the
    targets of the remaining transitions.  The row minimum, maximized over
    all rows, is the step value.
    """
    moves2 = successors(m, mask2)
    rows = []
    for x in sorted(members(mask1)):
        for a, x2 in m.delta(x):
            for delta in delta_candidates(m, a, moves2, "brute"):
                penalty = meet_all(m.d_label(a, b) for b in lab(delta))
                rest = d.singleton_value(x2, ter(moves2 - delta))
                rows.append(((a, x2), tuple(sorted(delta)), penalty, rest))
    return rows


def _demanded_cells(
    m: Mts, seeds: Iterable[tuple[int, int]], strategy: str
) -> list[tuple[int, int]]:
    seen: set[tuple[int, int]] = set()
    stack = list(seeds)
    while stack:
        cell = stack.pop()
        if cell in seen:
            continue
        seen.add(cell)
        x, mask2 = cell
        if mask2 == 0:
            continue
        moves2 = successors(m, mask2)
        for a, x2 in m.delta(x):
            for delta in delta_candidates(m, a, moves2, strategy):
                stack.append((x2, ter(moves2 - delta)))
    return sorted(seen)


def trace_metric_fixpoint(
    m: Mts,
    seeds: Iterable[tuple[int, int]],
    d0: DirectedMetricTable | None = None,
    strategy: str = "threshold",
    max_iter: int | None = None,
) -> FixpointReport:
    """Ascending Kleene iteration of the (decorated) trace behaviour function
    on the demanded (singleton, subset) cell closure.

    The bottom table is constant 0 with the empty column preset to 1; with a
    base distance ``d0`` every iterate is joined with the directed Hausdorff
    lifting of ``d0`` evaluated at the cell.
    """
    cells = _demanded_cells(m, seeds, strategy)
    base: dict[tuple[int, int], UnitValue] = {}
    bottom: dict[tuple[int, int], UnitValue] = {}
    for x, mask2 in cells:
        if mask2 == 0:
            bottom[(x, mask2)] = ONE
            continue
        bottom[(x, mask2)] = ZERO
        if d0 is not None:
            base[(x, mask2)] = meet_all(d0.at(x, y) for y in members(mask2))

    def step(cur: dict[tuple[int, int], UnitValue]) -> dict[tuple[int, int], UnitValue]:
        new = {}
        for (x, mask2), v in cur.items():
            if mask2 == 0:
                new[(x, mask2)] = ONE
                continue
            val = _bet_cell(m, lambda x2, t: cur[(x2, t)], x, mask2, strategy)
            b = base.get((x, mask2))
            if b is not None and b > val:
                val = b
            new[(x, mask2)] = val
        return new

    if max_iter is None:
        extra = [v for row in d0.entries for v in row] if d0 is not None else []
        max_iter = len(_metric_values(m, extra)) * max(len(cells), 1) + 1
    report = kleene_fix(step, bottom, max_iter)
    return report.with_table(PowersetMetricTable(m.n_states, report.table))


def dir_trace_metric_fixpoint(
    m: Mts,
    mask1: int,
    mask2: int,
    strategy: str = "threshold",
    max_iter: int | None = None,
) -> FixpointReport:
    seeds = [(x, mask2) for x in members(mask1)]
    return trace_metric_fixpoint(m, seeds, None, strategy, max_iter)


def dir_trace_metric(
    m: Mts, mask1: int, mask2: int, strategy: str = "threshold"
) -> UnitValue:
    """Directed trace distance of two state sets: the least fixpoint of the
    trace behaviour function, equal to the directed Hausdorff distance
    between the trace sets."""
    report = require_stabilized(
        dir_trace_metric_fixpoint(m, mask1, mask2, strategy), "directed trace metric"
    )
    return report.table.value(mask1, mask2)


def state_trace_metric_fixpoint(
    m: Mts, strategy: str = "threshold", max_iter: int | None = None
) -> FixpointReport:
    """Directed trace distance between all singleton pairs, via one shared
    demanded-cell closure; the table is a state-indexed hemimetric."""
    n = m.n_states
    seeds = [(x, 1 << y) for x in range(n) for y in range(n)]
    report = trace_metric_fixpoint(m, seeds, None, strategy, max_iter)
    pow_table: PowersetMetricTable = report.table
    rows = tuple(
        tuple(pow_table.singleton_value(x, 1 << y) for y in range(n)) for x in range(n)
    )
    return report.with_table(
        DirectedMetricTable(tuple(m.states), rows, symmetric=False)
    )


def trace_metric_full_fixpoint(
    m: Mts,
    d0: DirectedMetricTable | None = None,
    strategy: str = "threshold",
    max_iter: int | None = None,
) -> FixpointReport:
    """Tabulate every (singleton, subset) cell; only for small systems."""
    n = m.n_states
    if n > 12:
        raise ValueError("full powerset table requested for more than 12 states")
    seeds = [(x, mask2) for x in range(n) for mask2 in range(1 << n)]
    return trace_metric_fixpoint(m, seeds, d0, strategy, max_iter)


def decorated_d0(m: Mts, kind: str, strategy: str = "threshold") -> DirectedMetricTable:
    """Endpoint distance of a decorated trace semantics.

    The ready/failure variants measure how far the sets of enabled labels are
    apart: discretely, by the Hausdorff lifting of the label metric, or (for
    the pseudo-Hausdorff failure distance) by lifting over the refused
    labels.  possible_futures uses the symmetrized trace distance between
    singletons.
    """
    n = m.n_states
    enabled = [sorted(m.enabled(x)) for x in range(n)]
    all_labels = range(len(m.alphabet))
    d_disc = lambda a, b: ZERO if a == b else ONE

    if kind == "possible_futures":
        return require_stabilized(
            state_trace_metric_fixpoint(m, strategy), "possible futures base"
        ).table.symmetrized()

    symmetric = False
    if kind == "completed":
        refusal = [ONE if not enabled[x] else ZERO for x in range(n)]
        entry = lambda x, y: refusal[x].sub(refusal[y])
    elif kind == "failure_discrete":
        entry = lambda x, y: directed_hausdorff(d_disc, enabled[y], enabled[x])
    elif kind == "failure_hausdorff":
        entry = lambda x, y: directed_hausdorff(m.d_label, enabled[y], enabled[x])
    elif kind == "failure_pseudo_hausdorff":
        refused = [
            [a for a in all_labels if a not in m.enabled(x)] for x in range(n)
        ]
        entry = lambda x, y: directed_hausdorff(m.d_label, refused[x], refused[y])
    elif kind == "ready_discrete":
        entry = lambda x, y: ZERO if enabled[x] == enabled[y] else ONE
        symmetric = True
    elif kind == "ready_hausdorff":
        entry = lambda x, y: hausdorff(m.d_label, enabled[x], enabled[y])
        symmetric = True
    else:
        raise ValueError(f"unknown decorated metric kind {kind!r}")
    rows = tuple(tuple(entry(x, y) for y in range(n)) for x in range(n))
    return DirectedMetricTable(tuple(m.states), rows, symmetric=symmetric)


def decorated_trace_metric_fixpoint(
    m: Mts,
    mask1: int,
    mask2: int,
    d0: DirectedMetricTable,
    strategy: str = "threshold",
    max_iter: int | None = None,
) -> FixpointReport:
    seeds = [(x, mask2) for x in members(mask1)]
    return trace_metric_fixpoint(m, seeds, d0, strategy, max_iter)


def decorated_trace_metric(
    m: Mts,
    mask1: int,
    mask2: int,
    d0: DirectedMetricTable,
    strategy: str = "threshold",
) -> UnitValue:
    """Least fixpoint of the trace behaviour function joined with the
    directed Hausdorff lifting of the endpoint distance ``d0``."""
    report = require_stabilized(
        decorated_trace_metric_fixpoint(m, mask1, mask2, d0, strategy),
        "decorated trace metric",
    )
    return report.table.value(mask1, mask2)


def eps_characterization(
    m: Mts,
    mask1: int,
    mask2: int,
    d0: DirectedMetricTable | None,
    max_len: int,
) -> UnitValue:
    """Bounded-trace characterization of the decorated trace distance: the
    smallest error such that every trace-with-endpoint of X1 is matched by
    one of X2 within that error, both in the trace distance and in ``d0``.

    Exact when the system is acyclic and max_len covers the longest path;
    otherwise a lower approximation.
    """
    ends1 = [
        (sigma, x)
        for sigma, reached in bounded_traces(m, mask1, max_len).items()
        for x in members(reached)
    ]
    ends2 = [
        (tau, y)
        for tau, reached in bounded_traces(m, mask2, max_len).items()
        for y in members(reached)
    ]

    def pd(end1: tuple[tuple[int, ...], int], end2: tuple[tuple[int, ...], int]) -> UnitValue:
        sigma, x = end1
        tau, y = end2
        v = trace_distance(m, sigma, tau)
        if d0 is not None:
            v = max(v, d0.at(x, y))
        return v

    return directed_hausdorff(pd, ends1, ends2)


def kernel(d: DirectedMetricTable) -> RelationTable:
    """Zero-distance pairs as a relation; an equivalence for symmetric
    tables, a preorder otherwise."""
    n = len(d.states)
    rows = []
    for i in range(n):
        row = 0
        for j in range(n):
            if d.at(i, j) == ZERO:
                row |= 1 << j
        rows.append(row)
    return RelationTable(
        d.states, tuple(rows), kind="equivalence" if d.symmetric else "preorder"
    )


def kernel_pairs(d: PowersetMetricTable) -> frozenset[tuple[int, int]]:
    """Zero-valued tabulated cells of a powerset table, as (singleton mask,
    column mask) pairs."""
    return frozenset(
        (1 << x, mask2) for (x, mask2), v in d.cells.items() if v == ZERO
    )


def trace_value_candidates(
    m: Mts, d0: DirectedMetricTable | None = None
) -> tuple[UnitValue, ...]:
    """The finite set every (decorated) trace distance lives in: 0, 1, the
    label metric entries, and the entries of ``d0`` when given."""
    extra = [v for row in d0.entries for v in row] if d0 is not None else []
    return tuple(sorted(_metric_values(m, extra)))
