"""Qualitative spectrum: bisimilarity, similarity, trace and decorated traces.

Greatest fixpoints are computed by descending Kleene iteration from the
all-pairs relation; the generic driver only detects stabilization, so the same
engine serves both iteration directions.  Trace semantics lives on macro
states (subsets of the state space, via determinization) and is only ever
evaluated on the macro states reachable from the queried pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

from .core import FixpointReport, kleene_fix, relation_lift, require_stabilized
from .lts import Mts, members

__all__ = [
    "RelationTable",
    "all_pairs_relation",
    "bisim_step",
    "sim_step",
    "bisimilarity",
    "bisimilarity_fixpoint",
    "similarity",
    "similarity_fixpoint",
    "reachable_macrostates",
    "trace_step",
    "trace_equivalent",
    "trace_equivalence_fixpoint",
    "decorated_base",
    "decorated_trace_related",
    "decorated_trace_fixpoint",
    "state_equivalence",
    "DECORATED_KINDS",
]

DECORATED_KINDS = ("completed", "failure", "ready", "possible_futures")


@dataclass(frozen=True)
class RelationTable:
    """Boolean matrix over an explicit carrier (states or macro states).

    ``rows[i]`` is a bitmask: bit j is set iff carrier[i] is related to
    carrier[j].  ``kind`` records the intended shape; ``audit`` checks it.
    """

    carrier: tuple[Hashable, ...]
    rows: tuple[int, ...]
    kind: str = "plain"

    @cached_property
    def _index(self) -> dict[Hashable, int]:
        return {c: i for i, c in enumerate(self.carrier)}

    def index(self, element: Hashable) -> int:
        return self._index[element]

    def related(self, i: int, j: int) -> bool:
        return bool(self.rows[i] >> j & 1)

    def related_elements(self, x: Hashable, y: Hashable) -> bool:
        return self.related(self._index[x], self._index[y])

    def pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            (i, j) for i, row in enumerate(self.rows) for j in members(row)
        )

    def is_reflexive(self) -> bool:
        return all(row >> i & 1 for i, row in enumerate(self.rows))

    def is_symmetric(self) -> bool:
        n = len(self.carrier)
        return all(
            self.related(i, j) == self.related(j, i)
            for i in range(n)
            for j in range(i + 1, n)
        )

    def is_transitive(self) -> bool:
        for i, row in enumerate(self.rows):
            for j in members(row):
                if self.rows[j] & ~row:
                    return False
        return True

    def audit(self) -> None:
        """Check the invariants promised by ``kind``."""
        if self.kind in ("preorder", "equivalence", "congruence-on-powerset") and not (
            self.is_reflexive() and self.is_transitive()
        ):
            raise AssertionError(f"{self.kind} table is not a preorder")
        if self.kind in ("equivalence", "congruence-on-powerset") and not self.is_symmetric():
            raise AssertionError(f"{self.kind} table is not symmetric")

    def audit_congruence_sample(self, pairs: Iterable[tuple[int, int]]) -> None:
        """Componentwise-union closure on sampled related pairs; the carrier
        must contain the unions (macro-state carriers are bitmasks)."""
        pairs = list(pairs)
        for i1, j1 in pairs:
            for i2, j2 in pairs:
                u1 = self.carrier[i1] | self.carrier[i2]
                u2 = self.carrier[j1] | self.carrier[j2]
                if u1 in self._index and u2 in self._index:
                    if not self.related(self._index[u1], self._index[u2]):
                        raise AssertionError(
                            "congruence closure fails on sampled unions"
                        )

    @staticmethod
    def from_predicate(
        carrier: Sequence[Hashable],
        related: Callable[[Hashable, Hashable], bool],
        kind: str = "plain",
    ) -> "RelationTable":
        rows = []
        for x in carrier:
            row = 0
            for j, y in enumerate(carrier):
                if related(x, y):
                    row |= 1 << j
            rows.append(row)
        return RelationTable(tuple(carrier), tuple(rows), kind)


def _matched(m: Mts, rows: Sequence[int], x: int, y: int) -> bool:
    # every move of x is answered by an equally-labelled move of y into rows
    for a, x2 in m.delta(x):
        if not any(b == a and rows[x2] >> y2 & 1 for b, y2 in m.delta(y)):
            return False
    return True


def _transfer_rows(m: Mts, rows: Sequence[int], two_sided: bool) -> tuple[int, ...]:
    n = m.n_states
    new_rows = []
    for x in range(n):
        row = 0
        for y in range(n):
            ok = _matched(m, rows, x, y)
            if ok and two_sided:
                ok = _matched(m, rows, y, x)
            if ok:
                row |= 1 << y
        new_rows.append(row)
    return tuple(new_rows)


def bisim_step(m: Mts, table: RelationTable) -> RelationTable:
    """One application of the two-sided transfer condition."""
    return RelationTable(
        table.carrier, _transfer_rows(m, table.rows, two_sided=True), table.kind
    )


def sim_step(m: Mts, table: RelationTable) -> RelationTable:
    """One application of the one-sided transfer condition."""
    return RelationTable(
        table.carrier, _transfer_rows(m, table.rows, two_sided=False), table.kind
    )


def all_pairs_relation(carrier: Sequence[Hashable], kind: str) -> RelationTable:
    full = (1 << len(carrier)) - 1
    return RelationTable(tuple(carrier), tuple(full for _ in carrier), kind)


def bisimilarity_fixpoint(m: Mts, max_iter: int | None = None) -> FixpointReport:
    """Greatest fixpoint of the two-sided transfer condition, descending from
    the all-pairs relation."""
    n = m.n_states
    all_pairs = tuple((1 << n) - 1 for _ in range(n))
    report = kleene_fix(
        lambda rows: _transfer_rows(m, rows, two_sided=True),
        all_pairs,
        max_iter if max_iter is not None else 2 * n * n + 2,
    )
    table = RelationTable(tuple(m.states), report.table, kind="equivalence")
    return report.with_table(table)


def bisimilarity(m: Mts) -> RelationTable:
    return require_stabilized(bisimilarity_fixpoint(m), "bisimilarity").table


def similarity_fixpoint(m: Mts, max_iter: int | None = None) -> FixpointReport:
    """Greatest fixpoint of the one-sided transfer condition; x related to y
    means y simulates x."""
    n = m.n_states
    all_pairs = tuple((1 << n) - 1 for _ in range(n))
    report = kleene_fix(
        lambda rows: _transfer_rows(m, rows, two_sided=False),
        all_pairs,
        max_iter if max_iter is not None else 2 * n * n + 2,
    )
    table = RelationTable(tuple(m.states), report.table, kind="preorder")
    return report.with_table(table)


def similarity(m: Mts) -> RelationTable:
    return require_stabilized(similarity_fixpoint(m), "similarity").table


def reachable_macrostates(m: Mts, seeds: Iterable[int]) -> tuple[int, ...]:
    """Macro states reachable from the seeds under determinization, sorted."""
    seen: set[int] = set()
    stack = list(seeds)
    while stack:
        mask = stack.pop()
        if mask in seen:
            continue
        seen.add(mask)
        for a in range(len(m.alphabet)):
            stack.append(m.step(mask, a))
    return tuple(sorted(seen))


def trace_step(m: Mts, table: RelationTable) -> RelationTable:
    """One application of the trace behaviour step on a macro-state carrier.

    X1 stays related to X2 iff their emptiness agrees and every
    determinization successor pair is related in the input.  The carrier must
    be closed under determinization steps (see reachable_macrostates).
    """
    carrier = table.carrier
    idx = {c: i for i, c in enumerate(carrier)}
    n_labels = len(m.alphabet)
    succ = [[idx[m.step(mask, a)] for a in range(n_labels)] for mask in carrier]
    rows = []
    for i, mask1 in enumerate(carrier):
        row = 0
        for j in members(table.rows[i]):
            mask2 = carrier[j]
            if (mask1 == 0) != (mask2 == 0):
                continue
            if all(table.related(succ[i][a], succ[j][a]) for a in range(n_labels)):
                row |= 1 << j
        rows.append(row)
    return RelationTable(carrier, tuple(rows), table.kind)


def _reachable_pairs(m: Mts, x1: int, x2: int) -> tuple[tuple[int, int], ...]:
    seen: set[tuple[int, int]] = set()
    stack = [(x1, x2)]
    while stack:
        pair = stack.pop()
        if pair in seen:
            continue
        seen.add(pair)
        u, v = pair
        for a in range(len(m.alphabet)):
            stack.append((m.step(u, a), m.step(v, a)))
    return tuple(sorted(seen))


def _pair_graph_fixpoint(
    m: Mts,
    x1: int,
    x2: int,
    static_ok: Callable[[int, int], bool],
) -> FixpointReport:
    """Descending fixpoint over the pairs reachable from (x1, x2): a pair
    survives iff it passes the static test and all successor pairs survive."""
    pairs = _reachable_pairs(m, x1, x2)
    n_labels = len(m.alphabet)
    succs = {
        (u, v): tuple((m.step(u, a), m.step(v, a)) for a in range(n_labels))
        for u, v in pairs
    }
    statics = frozenset(p for p in pairs if static_ok(*p))

    def step(related: frozenset) -> frozenset:
        return frozenset(
            p for p in related if p in statics and all(q in related for q in succs[p])
        )

    return kleene_fix(step, frozenset(pairs), 2 * len(pairs) + 2)


def trace_equivalence_fixpoint(m: Mts, x1: int, x2: int) -> FixpointReport:
    return _pair_graph_fixpoint(m, x1, x2, lambda u, v: (u == 0) == (v == 0))


def trace_equivalent(m: Mts, x1: int, x2: int) -> bool:
    """traces(X1) = traces(X2), decided on the reachable determinized pair
    graph (DFA equivalence with nonempty-macro-state acceptance)."""
    report = require_stabilized(
        trace_equivalence_fixpoint(m, x1, x2), "trace equivalence"
    )
    return (x1, x2) in report.table


def decorated_base(m: Mts, kind: str) -> RelationTable:
    """The endpoint preorder of a decorated trace semantics.

    completed: refusal of everything transfers left to right; failure: the
    right state's ready set is contained in the left one's; ready: equal
    ready sets; possible_futures: equal trace sets.
    """
    enabled = [m.enabled(x) for x in range(m.n_states)]
    if kind == "completed":
        related = lambda x, y: not enabled[x] or bool(enabled[y])
        shape = "preorder"
    elif kind == "failure":
        related = lambda x, y: enabled[y] <= enabled[x]
        shape = "preorder"
    elif kind == "ready":
        related = lambda x, y: enabled[x] == enabled[y]
        shape = "equivalence"
    elif kind == "possible_futures":
        related = lambda x, y: trace_equivalent(m, 1 << x, 1 << y)
        shape = "equivalence"
    else:
        raise ValueError(f"unknown decorated kind {kind!r}")
    rows = []
    for x in range(m.n_states):
        row = 0
        for y in range(m.n_states):
            if related(x, y):
                row |= 1 << y
        rows.append(row)
    return RelationTable(tuple(m.states), tuple(rows), shape)


def decorated_trace_fixpoint(
    m: Mts, x1: int, x2: int, base: RelationTable
) -> FixpointReport:
    lifted = relation_lift(base.related, "symmetric")

    def static_ok(u: int, v: int) -> bool:
        if (u == 0) != (v == 0):
            return False
        return lifted(members(u), members(v))

    return _pair_graph_fixpoint(m, x1, x2, static_ok)


def decorated_trace_related(m: Mts, x1: int, x2: int, base: RelationTable) -> bool:
    """Decorated trace equivalence of two state sets: every trace of one side
    is matched by the other with base-related endpoints, both ways."""
    report = require_stabilized(
        decorated_trace_fixpoint(m, x1, x2, base), "decorated trace relation"
    )
    return (x1, x2) in report.table


def state_equivalence(m: Mts, semantics: str, max_iter: int | None = None) -> RelationTable:
    """Relation over single states for one of the qualitative semantics:
    bisim, sim, trace, completed, failure, ready, possible-futures."""
    if semantics == "bisim":
        return require_stabilized(bisimilarity_fixpoint(m, max_iter), "bisimilarity").table
    if semantics == "sim":
        return require_stabilized(similarity_fixpoint(m, max_iter), "similarity").table
    if semantics == "trace":
        return RelationTable.from_predicate(
            tuple(m.states),
            lambda x, y: trace_equivalent(m, 1 << m.state_index(x), 1 << m.state_index(y)),
            kind="equivalence",
        )
    kind = semantics.replace("-", "_")
    if kind in DECORATED_KINDS:
        base = decorated_base(m, kind)
        return RelationTable.from_predicate(
            tuple(m.states),
            lambda x, y: decorated_trace_related(
                m, 1 << m.state_index(x), 1 << m.state_index(y), base
            ),
            kind="equivalence",
        )
    raise ValueError(f"unknown semantics {semantics!r}")
