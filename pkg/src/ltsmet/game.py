"""Threshold game deciding d_T(X1, X2) <= epsilon.

Two players: Death (the challenger) picks a transition (a, x') from the left
set and confines Maiden (the matcher) to a subset Delta of the right set's
transitions.  Maiden either accepts, ending the play with the error of the
best transition in Delta (1 when Delta is empty), or rejects, continuing from
{x'} against the targets of the remaining transitions.  Death wins iff he can
force, within finitely many moves, an ended or stuck play whose error exceeds
epsilon.

Infinite plays are awarded to Maiden: the fixpoint the game decides is a
least fixpoint, so errors only count when realized in finite time.  This rule
is a modelling decision validated against the fixpoint on cyclic instances.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .core import ONE, UnitValue, meet_all
from .lts import Mts, lab, successors, ter
from .quantitative import delta_candidates, trace_value_candidates

__all__ = ["GameResult", "solve_game", "game_value"]

DeathPos = tuple[str, int, int]
MaidenPos = tuple[str, int, int, frozenset, int]


@dataclass(frozen=True)
class GameResult:
    maiden_wins: bool
    epsilon: UnitValue
    initial: DeathPos
    death_region: frozenset
    n_positions: int

    @property
    def winner(self) -> str:
        return "maiden_wins" if self.maiden_wins else "death_wins"


def solve_game(
    m: Mts, mask1: int, mask2: int, epsilon: UnitValue, prune: bool = True
) -> GameResult:
    """Attractor computation on the reachable game graph.

    With ``prune`` the challenger only proposes threshold-form subsets,
    mirroring the fixpoint step; the full subset graph (prune=False) is kept
    for cross-checks.
    """
    strategy = "threshold" if prune else "brute"
    initial: DeathPos = ("D", mask1, mask2)

    succ: dict[tuple, list[tuple]] = {}
    preds: dict[tuple, list[tuple]] = {}
    accept_error: dict[tuple, UnitValue] = {}
    death_terminals: list[tuple] = []

    stack = [initial]
    seen = {initial}
    while stack:
        pos = stack.pop()
        if pos[0] == "D":
            _, u, v = pos
            if u != 0 and v == 0:
                # distance to the empty set is 1 by definition
                succ[pos] = []
                if epsilon < ONE:
                    death_terminals.append(pos)
                continue
            moves2 = successors(m, v)
            options = []
            for a, x2 in sorted(successors(m, u)):
                for delta in delta_candidates(m, a, moves2, strategy):
                    options.append(("M", a, x2, delta, v))
            succ[pos] = options
        else:
            _, a, x2, delta, v = pos
            moves2 = successors(m, v)
            reject: DeathPos = ("D", 1 << x2, ter(moves2 - delta))
            accept_error[pos] = meet_all(m.d_label(a, b) for b in lab(delta))
            succ[pos] = [reject]
        for child in succ[pos]:
            preds.setdefault(child, []).append(pos)
            if child not in seen:
                seen.add(child)
                stack.append(child)

    # least fixpoint: Death's winning region grows backwards from the
    # terminals he has already won
    region: set[tuple] = set()
    queue = deque(death_terminals)
    region.update(death_terminals)
    while queue:
        pos = queue.popleft()
        for p in preds.get(pos, ()):
            if p in region:
                continue
            if p[0] == "D":
                region.add(p)
                queue.append(p)
            elif accept_error[p] > epsilon:
                # Maiden can neither accept (error too big) nor escape
                region.add(p)
                queue.append(p)

    return GameResult(
        maiden_wins=initial not in region,
        epsilon=epsilon,
        initial=initial,
        death_region=frozenset(region),
        n_positions=len(seen),
    )


def game_value(m: Mts, mask1: int, mask2: int, prune: bool = True) -> UnitValue:
    """Recover the trace distance by bisection over the finite candidate
    value set; the game winner is monotone in epsilon."""
    candidates = trace_value_candidates(m)
    lo, hi = 0, len(candidates) - 1
    # maiden always wins at epsilon = 1
    while lo < hi:
        mid = (lo + hi) // 2
        if solve_game(m, mask1, mask2, candidates[mid], prune).maiden_wins:
            hi = mid
        else:
            lo = mid + 1
    return candidates[lo]
