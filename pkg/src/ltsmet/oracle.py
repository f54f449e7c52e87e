"""Brute-force reference semantics used for cross-validation.

These implementations enumerate bounded trace sets directly and never touch
the fixpoint modules they are meant to validate; the only shared code is the
transition-system model and the unit-interval arithmetic.  They favour
clarity over speed: both oracles are quadratic in the number of enumerated
trace endpoints, so instance-size guards are enforced.
"""

from __future__ import annotations

from typing import Callable

from .core import UnitValue, directed_hausdorff, relation_lift
from .lts import Mts, bounded_traces, members, trace_distance

__all__ = ["OracleBudgetError", "trace_hausdorff_oracle", "omega_oracle"]

MAX_STATES = 8
MAX_LEN = 10


class OracleBudgetError(RuntimeError):
    """Instance exceeds the documented oracle guards."""


def _guard(m: Mts, max_len: int, state_limit: int, length_limit: int) -> None:
    if m.n_states > state_limit:
        raise OracleBudgetError(f"oracle limited to {state_limit} states")
    if max_len > length_limit:
        raise OracleBudgetError(f"oracle limited to trace length {length_limit}")


def trace_hausdorff_oracle(
    m: Mts,
    mask1: int,
    mask2: int,
    max_len: int,
    mode: str = "directed",
    state_limit: int = MAX_STATES,
    length_limit: int = MAX_LEN,
) -> UnitValue:
    """Hausdorff lifting of the trace distance over bounded, prefix-closed
    trace sets.

    Exact when the system is acyclic and max_len covers the longest path;
    otherwise a lower approximation of the true distance.  The default size
    guards suit randomized sweeps; callers working a specific instance may
    raise them.
    """
    _guard(m, max_len, state_limit, length_limit)
    traces1 = tuple(bounded_traces(m, mask1, max_len))
    traces2 = tuple(bounded_traces(m, mask2, max_len))
    d = lambda s, t: trace_distance(m, s, t)
    if mode == "directed":
        return directed_hausdorff(d, traces1, traces2)
    if mode == "symmetric":
        return max(
            directed_hausdorff(d, traces1, traces2),
            directed_hausdorff(d, traces2, traces1),
        )
    raise ValueError(f"unknown mode {mode!r}")


def omega_oracle(
    m: Mts,
    mask1: int,
    mask2: int,
    related: Callable[[int, int], bool],
    max_len: int,
    state_limit: int = MAX_STATES,
    length_limit: int = MAX_LEN,
) -> bool:
    """Direct check of the decorated matching condition: every bounded trace
    of one side is a trace of the other, with endpoint sets related under the
    symmetric lifting of ``related``."""
    _guard(m, max_len, state_limit, length_limit)
    t1 = bounded_traces(m, mask1, max_len)
    t2 = bounded_traces(m, mask2, max_len)
    lifted = relation_lift(related, "symmetric")
    for sigma in t1.keys() | t2.keys():
        reached1 = t1.get(sigma, 0)
        reached2 = t2.get(sigma, 0)
        if not lifted(members(reached1), members(reached2)):
            return False
    return True
