"""Metric labelled transition systems: model, file format, traces.

State sets are plain Python ints used as bitmasks over the state indices
(canonical bitset semantics); traces are tuples of label indices.

Model file format (line-oriented, ``#`` starts a comment, tokens are
whitespace-separated)::

    states:   s1 s2 ...
    alphabet: a1 a2 ...
    metric:   a b p/q        # optional; symmetric entries auto-filled,
                             # self-distance 0, missing pairs default to 1
    trans:    s a t          # one transition per line

Rationals are written ``p/q`` or as the integers ``0``/``1``; parsing is
bit-exact, there is no floating-point intermediate.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Iterable, Iterator, Mapping

from .core import ONE, ZERO, UnitValue, parse_unit

__all__ = [
    "MtsError",
    "MtsParseError",
    "LabelMetric",
    "Mts",
    "make_mts",
    "parse_mts",
    "to_text",
    "model_digest",
    "members",
    "mask_of",
    "successors",
    "lab",
    "ter",
    "bounded_traces",
    "trace_distance",
]


class MtsError(ValueError):
    """Invalid model data."""


class MtsParseError(MtsError):
    """Malformed model file."""


def members(mask: int) -> Iterator[int]:
    """Indices of the set bits, ascending."""
    i = 0
    while mask:
        if mask & 1:
            yield i
        mask >>= 1
        i += 1


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


@dataclass(frozen=True)
class LabelMetric:
    """Pairwise distances on the alphabet, stored as a full matrix.

    Invariants checked at construction: zero diagonal, symmetry, triangle
    inequality, and strictly positive off-diagonal entries (a proper metric,
    not a pseudo-metric).
    """

    labels: tuple[str, ...]
    table: tuple[tuple[UnitValue, ...], ...]

    @staticmethod
    def build(
        labels: tuple[str, ...],
        entries: Mapping[tuple[str, str], UnitValue] | None = None,
    ) -> "LabelMetric":
        """Fill in a matrix from sparse entries; unspecified pairs get the
        discrete default (distance 1)."""
        entries = dict(entries or {})
        index = {a: i for i, a in enumerate(labels)}
        n = len(labels)
        rows = [[ONE] * n for _ in range(n)]
        for i in range(n):
            rows[i][i] = ZERO
        for (a, b), v in entries.items():
            if a not in index or b not in index:
                raise MtsError(f"metric entry for unknown label: {a} {b}")
            i, j = index[a], index[b]
            if i == j:
                if v != ZERO:
                    raise MtsError(f"self-distance of {a} must be 0, got {v}")
                continue
            rows[i][j] = v
            rows[j][i] = v
        metric = LabelMetric(labels, tuple(tuple(row) for row in rows))
        metric.validate()
        return metric

    def validate(self) -> None:
        n = len(self.labels)
        for i in range(n):
            if self.table[i][i] != ZERO:
                raise MtsError(f"nonzero self-distance for {self.labels[i]}")
            for j in range(n):
                if self.table[i][j] != self.table[j][i]:
                    raise MtsError(
                        f"asymmetric metric entry {self.labels[i]} {self.labels[j]}"
                    )
                if i != j and self.table[i][j] == ZERO:
                    raise MtsError(
                        "zero distance between distinct labels "
                        f"{self.labels[i]} {self.labels[j]}"
                    )
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if self.table[i][k].value > self.table[i][j].value + self.table[j][k].value:
                        raise MtsError(
                            "triangle inequality violated on "
                            f"({self.labels[i]}, {self.labels[j]}, {self.labels[k]})"
                        )

    def distance(self, i: int, j: int) -> UnitValue:
        return self.table[i][j]

    def denominator_lcm(self) -> int:
        q = 1
        for row in self.table:
            for v in row:
                q = lcm(q, v.value.denominator)
        return q

    def values(self) -> frozenset[UnitValue]:
        return frozenset(v for row in self.table for v in row)


@dataclass(frozen=True)
class Mts:
    """Finite metric labelled transition system.

    Immutable after construction; all index references are validated.
    Transitions are (source, label, target) index triples.
    """

    states: tuple[str, ...]
    alphabet: tuple[str, ...]
    transitions: tuple[tuple[int, int, int], ...]
    label_metric: LabelMetric

    def __post_init__(self) -> None:
        ns, na = len(self.states), len(self.alphabet)
        if len(set(self.states)) != ns:
            raise MtsError("duplicate state names")
        if len(set(self.alphabet)) != na:
            raise MtsError("duplicate labels")
        if self.label_metric.labels != self.alphabet:
            raise MtsError("label metric does not match the alphabet")
        object.__setattr__(self, "transitions", tuple(sorted(set(self.transitions))))
        for s, a, t in self.transitions:
            if not (0 <= s < ns and 0 <= t < ns and 0 <= a < na):
                raise MtsError(f"transition out of range: {(s, a, t)}")

    @cached_property
    def _delta(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        out: list[list[tuple[int, int]]] = [[] for _ in self.states]
        for s, a, t in sorted(set(self.transitions)):
            out[s].append((a, t))
        return tuple(tuple(moves) for moves in out)

    @cached_property
    def _state_index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.states)}

    @cached_property
    def _label_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.alphabet)}

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.states)) - 1

    def state_index(self, name: str) -> int:
        try:
            return self._state_index[name]
        except KeyError:
            raise MtsError(f"unknown state {name!r}") from None

    def label_index(self, name: str) -> int:
        try:
            return self._label_index[name]
        except KeyError:
            raise MtsError(f"unknown label {name!r}") from None

    def state_set(self, names: Iterable[str]) -> int:
        return mask_of(self.state_index(n) for n in names)

    def delta(self, x: int) -> tuple[tuple[int, int], ...]:
        """Outgoing (label, target) moves of one state."""
        return self._delta[x]

    def delta_a(self, x: int, a: int) -> tuple[int, ...]:
        return tuple(t for b, t in self._delta[x] if b == a)

    def d_label(self, a: int, b: int) -> UnitValue:
        return self.label_metric.table[a][b]

    def enabled(self, x: int) -> frozenset[int]:
        return frozenset(a for a, _ in self._delta[x])

    def step(self, mask: int, a: int) -> int:
        """delta_a applied to a state set, as a set."""
        out = 0
        for x in members(mask):
            for b, t in self._delta[x]:
                if b == a:
                    out |= 1 << t
        return out

    def is_acyclic(self) -> bool:
        return self.longest_path() is not None

    def longest_path(self) -> int | None:
        """Length (in transitions) of the longest path, or None on a cycle."""
        WHITE, GREY, BLACK = 0, 1, 2
        color = [WHITE] * self.n_states
        depth = [0] * self.n_states

        def visit(x: int) -> bool:
            color[x] = GREY
            best = 0
            for _, t in self._delta[x]:
                if color[t] == GREY:
                    return False
                if color[t] == WHITE and not visit(t):
                    return False
                best = max(best, depth[t] + 1)
            depth[x] = best
            color[x] = BLACK
            return True

        for x in range(self.n_states):
            if color[x] == WHITE and not visit(x):
                return None
        return max(depth, default=0)


def make_mts(
    states: Iterable[str],
    alphabet: Iterable[str],
    transitions: Iterable[tuple[str, str, str]],
    metric: Mapping[tuple[str, str], UnitValue | Fraction | int] | None = None,
) -> Mts:
    """Name-based constructor used by tests and library clients."""
    states = tuple(states)
    alphabet = tuple(alphabet)
    sidx = {s: i for i, s in enumerate(states)}
    aidx = {a: i for i, a in enumerate(alphabet)}
    try:
        trans = tuple((sidx[s], aidx[a], sidx[t]) for s, a, t in transitions)
    except KeyError as exc:
        raise MtsError(f"unknown identifier in transition: {exc.args[0]!r}") from None
    entries = {
        pair: v if isinstance(v, UnitValue) else UnitValue(Fraction(v))
        for pair, v in (metric or {}).items()
    }
    return Mts(states, alphabet, trans, LabelMetric.build(alphabet, entries))


def parse_mts(text: str) -> Mts:
    """Parse the model file format; see the module docstring."""
    states: list[str] = []
    alphabet: list[str] = []
    metric_entries: dict[tuple[str, str], UnitValue] = {}
    transition_lines: list[tuple[str, str, str, int]] = []
    seen_states: set[str] = set()
    seen_labels: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        fields = rest.split()
        if key == "states":
            for s in fields:
                if s in seen_states:
                    raise MtsParseError(f"line {lineno}: duplicate state {s!r}")
                seen_states.add(s)
                states.append(s)
        elif key == "alphabet":
            for a in fields:
                if a in seen_labels:
                    raise MtsParseError(f"line {lineno}: duplicate label {a!r}")
                seen_labels.add(a)
                alphabet.append(a)
        elif key == "metric":
            if len(fields) != 3:
                raise MtsParseError(f"line {lineno}: expected 'metric: a b p/q'")
            a, b, value_text = fields
            try:
                v = parse_unit(value_text)
            except ValueError as exc:
                raise MtsParseError(f"line {lineno}: {exc}") from None
            metric_entries[(a, b)] = v
        elif key == "trans":
            if len(fields) != 3:
                raise MtsParseError(f"line {lineno}: expected 'trans: s a t'")
            transition_lines.append((fields[0], fields[1], fields[2], lineno))
        else:
            raise MtsParseError(f"line {lineno}: unknown section {key!r}")

    sidx = {s: i for i, s in enumerate(states)}
    aidx = {a: i for i, a in enumerate(alphabet)}
    for (a, b) in metric_entries:
        if a not in aidx or b not in aidx:
            raise MtsParseError(f"metric entry for unknown label: {a} {b}")
    transitions = []
    for s, a, t, lineno in transition_lines:
        if s not in sidx:
            raise MtsParseError(f"line {lineno}: unknown state {s!r}")
        if t not in sidx:
            raise MtsParseError(f"line {lineno}: unknown state {t!r}")
        if a not in aidx:
            raise MtsParseError(f"line {lineno}: unknown label {a!r}")
        transitions.append((sidx[s], aidx[a], sidx[t]))
    try:
        metric = LabelMetric.build(tuple(alphabet), metric_entries)
        return Mts(tuple(states), tuple(alphabet), tuple(transitions), metric)
    except MtsError as exc:
        raise MtsParseError(str(exc)) from None


def to_text(m: Mts) -> str:
    """Canonical serialization; parse_mts(to_text(m)) reproduces m."""
    lines = [
        "states: " + " ".join(m.states),
        "alphabet: " + " ".join(m.alphabet),
    ]
    n = len(m.alphabet)
    for i in range(n):
        for j in range(i + 1, n):
            v = m.label_metric.table[i][j]
            lines.append(f"metric: {m.alphabet[i]} {m.alphabet[j]} {v}")
    for s, a, t in sorted(set(m.transitions)):
        lines.append(f"trans: {m.states[s]} {m.alphabet[a]} {m.states[t]}")
    return "\n".join(lines) + "\n"


def model_digest(m: Mts) -> str:
    return hashlib.sha256(to_text(m).encode("utf-8")).hexdigest()[:16]


def successors(m: Mts, mask: int, a: int | None = None) -> frozenset[tuple[int, int]]:
    """delta[X]: all outgoing (label, target) moves of members of X;
    restricted to one label when ``a`` is given."""
    out = set()
    for x in members(mask):
        for b, t in m.delta(x):
            if a is None or b == a:
                out.add((b, t))
    return frozenset(out)


def lab(moves: Iterable[tuple[int, int]]) -> frozenset[int]:
    """First projection: the labels of a move set."""
    return frozenset(a for a, _ in moves)


def ter(moves: Iterable[tuple[int, int]]) -> int:
    """Second projection: the targets of a move set, as a state set."""
    return mask_of(t for _, t in moves)


def bounded_traces(m: Mts, mask: int, max_len: int) -> dict[tuple[int, ...], int]:
    """All traces of length <= max_len enabled from X, with the reached set.

    A sequence is a trace of X iff some member of X can perform it, i.e. the
    reached set is nonempty; the result is prefix-closed and maps each trace
    to the full set of states reachable along it.  The empty state set has no
    traces at all, not even the empty one.
    """
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    out: dict[tuple[int, ...], int] = {}
    if mask == 0:
        return out
    frontier: dict[tuple[int, ...], int] = {(): mask}
    out.update(frontier)
    for _ in range(max_len):
        nxt: dict[tuple[int, ...], int] = {}
        for trace, reached in frontier.items():
            for a in range(len(m.alphabet)):
                target = m.step(reached, a)
                if target:
                    nxt[trace + (a,)] = target
        if not nxt:
            break
        out.update(nxt)
        frontier = nxt
    return out


def trace_distance(m: Mts, sigma: tuple[int, ...], tau: tuple[int, ...]) -> UnitValue:
    """Distance of two traces: 1 on a length mismatch, otherwise the
    pointwise supremum of the label metric (0 for two empty traces)."""
    if len(sigma) != len(tau):
        return ONE
    best = ZERO
    for a, b in zip(sigma, tau):
        v = m.d_label(a, b)
        if v > best:
            best = v
            if best == ONE:
                break
    return best
