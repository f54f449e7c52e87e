"""Shared fixtures: canned systems from the models directory and seeded
random instance generators used by the property and acceptance tests."""

from __future__ import annotations

import random
from fractions import Fraction
from pathlib import Path

from ltsmet import Mts, make_mts, parse_mts

MODELS = Path(__file__).resolve().parent.parent / "models"


def load_model(name: str) -> Mts:
    return parse_mts((MODELS / name).read_text())


def fig_system() -> Mts:
    return load_model("fig_trace.mts")


def why_shifts_system() -> Mts:
    return load_model("why_shifts.mts")


def pseudo_witness_system() -> Mts:
    return load_model("pseudo_failure_witness.mts")


def chain_vs_branch() -> Mts:
    """a;b against a;(b+c), as one system: the chain is p0, the branch q0."""
    return make_mts(
        ["p0", "p1", "p2", "q0", "q1", "q2", "q3"],
        ["a", "b", "c"],
        [
            ("p0", "a", "p1"),
            ("p1", "b", "p2"),
            ("q0", "a", "q1"),
            ("q1", "b", "q2"),
            ("q1", "c", "q3"),
        ],
    )


def branch_vs_split() -> Mts:
    """a;(b+c) against (a;b)+(a;c): trace equivalent but not bisimilar and
    not ready equivalent; u0 is the single-branch process, v0 the split."""
    return make_mts(
        ["u0", "u1", "u2", "u3", "v0", "v1", "v2", "v3", "v4"],
        ["a", "b", "c"],
        [
            ("u0", "a", "u1"),
            ("u1", "b", "u2"),
            ("u1", "c", "u3"),
            ("v0", "a", "v1"),
            ("v0", "a", "v2"),
            ("v1", "b", "v3"),
            ("v2", "c", "v4"),
        ],
    )


def finite_a_system(k: int) -> Mts:
    """Truncation of the shrinking-self-loop family: x loops on 0, y_i loops
    on 1/i, for i = 1..k."""
    states = ["x"] + [f"y{i}" for i in range(1, k + 1)]
    labels = ["0"] + [("1" if i == 1 else f"1/{i}") for i in range(1, k + 1)]
    points = {labels[0]: Fraction(0)}
    for i in range(1, k + 1):
        points[labels[i]] = Fraction(1, i)
    metric = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            metric[(a, b)] = abs(points[a] - points[b])
    transitions = [("x", "0", "x")] + [
        (f"y{i}", labels[i], f"y{i}") for i in range(1, k + 1)
    ]
    return make_mts(states, labels, transitions, metric)


def random_mts(
    rng: random.Random,
    max_states: int = 6,
    max_labels: int = 3,
    acyclic: bool = False,
    metric_style: str | None = None,
) -> Mts:
    """Random system with a valid label metric (denominators <= 6).

    Metric styles: discrete (all distances 1), line (labels placed on
    distinct sixths of the unit interval, Euclidean distances), big (all
    off-diagonal distances in [1/2, 1], where the triangle inequality is
    automatic).
    """
    n = rng.randint(1, max_states)
    k = rng.randint(1, max_labels)
    states = [f"s{i}" for i in range(n)]
    labels = list("abc"[:k])
    style = metric_style or rng.choice(["discrete", "line", "big"])
    metric: dict[tuple[str, str], Fraction] = {}
    if style == "line":
        points = rng.sample(range(7), k)
        for i in range(k):
            for j in range(i + 1, k):
                metric[(labels[i], labels[j])] = Fraction(abs(points[i] - points[j]), 6)
    elif style == "big":
        for i in range(k):
            for j in range(i + 1, k):
                metric[(labels[i], labels[j])] = Fraction(rng.randint(3, 6), 6)
    transitions = set()
    for _ in range(rng.randint(0, 2 * n)):
        s = rng.randrange(n)
        if acyclic:
            if s == n - 1:
                continue
            t = rng.randrange(s + 1, n)
        else:
            t = rng.randrange(n)
        transitions.add((states[s], rng.choice(labels), states[t]))
    return make_mts(states, labels, sorted(transitions), metric)
