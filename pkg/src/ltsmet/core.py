"""Exact unit-interval arithmetic, Kleene fixpoint driver, Hausdorff liftings.

Every distance in this library is an exact rational in [0, 1].  All lattice
operations used downstream (min, max, truncated plus/minus) keep values inside
the finite set generated by the label metric, which is what makes every
fixpoint iteration stabilize exactly: there is no tolerance parameter
anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, TypeVar

__all__ = [
    "UnitValue",
    "ZERO",
    "ONE",
    "unit",
    "parse_unit",
    "unit_arith",
    "join_all",
    "meet_all",
    "FixpointReport",
    "FixpointError",
    "kleene_fix",
    "directed_hausdorff",
    "hausdorff",
    "relation_lift",
]

T = TypeVar("T")
U = TypeVar("U")


@dataclass(frozen=True, order=True)
class UnitValue:
    """An exact rational in [0, 1].

    Ordering is the rational order; join/meet are ``max``/``min`` via the
    builtins.  Addition and subtraction are truncated at the interval
    boundaries.
    """

    value: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))
        if not 0 <= self.value <= 1:
            raise ValueError(f"unit value out of range [0, 1]: {self.value}")

    def add(self, other: "UnitValue") -> "UnitValue":
        """Truncated addition: min(a + b, 1)."""
        s = self.value + other.value
        return ONE if s >= 1 else UnitValue(s)

    def sub(self, other: "UnitValue") -> "UnitValue":
        """Truncated subtraction: max(a - b, 0)."""
        d = self.value - other.value
        return ZERO if d <= 0 else UnitValue(d)

    def complement(self) -> "UnitValue":
        return UnitValue(1 - self.value)

    def __str__(self) -> str:
        if self.value.denominator == 1:
            return str(self.value.numerator)
        return f"{self.value.numerator}/{self.value.denominator}"


ZERO = UnitValue(Fraction(0))
ONE = UnitValue(Fraction(1))


def unit(numerator: int | Fraction, denominator: int = 1) -> UnitValue:
    """Shorthand constructor, ``unit(1, 2) == 1/2``."""
    return UnitValue(Fraction(numerator, denominator))


def parse_unit(text: str) -> UnitValue:
    """Parse ``p/q`` or a bare integer; rejects anything float-shaped.

    Parsing goes through integer arithmetic only, so it is bit-exact.
    """
    text = text.strip()
    num, _, den = text.partition("/")
    try:
        if den:
            value = Fraction(int(num), int(den))
        else:
            value = Fraction(int(num))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational: {text!r}") from exc
    return UnitValue(value)


def unit_arith(op: str, a: UnitValue, b: UnitValue) -> UnitValue:
    """Dispatch for the four unit-interval operations.

    ``add`` is truncated plus, ``sub`` truncated minus, ``min``/``max`` are
    lattice meet and join.
    """
    if op == "add":
        return a.add(b)
    if op == "sub":
        return a.sub(b)
    if op == "min":
        return min(a, b)
    if op == "max":
        return max(a, b)
    raise ValueError(f"unknown operation {op!r}")


def join_all(values: Iterable[UnitValue]) -> UnitValue:
    """Supremum with the empty-join convention: join of nothing is 0."""
    best = ZERO
    for v in values:
        if v > best:
            best = v
            if best == ONE:
                break
    return best


def meet_all(values: Iterable[UnitValue]) -> UnitValue:
    """Infimum with the empty-meet convention: meet of nothing is 1."""
    best = ONE
    for v in values:
        if v < best:
            best = v
            if best == ZERO:
                break
    return best


class FixpointError(RuntimeError):
    """A fixpoint iteration hit its bound without stabilizing."""


@dataclass(frozen=True)
class FixpointReport:
    """Outcome of a Kleene iteration.

    ``iterations`` counts applications of the step function, including the
    final application that confirmed stability.  If ``stabilized`` is true,
    one further application of the step leaves ``table`` unchanged.
    """

    iterations: int
    stabilized: bool
    table: Any

    def with_table(self, table: Any) -> "FixpointReport":
        return FixpointReport(self.iterations, self.stabilized, table)


def kleene_fix(step: Callable[[T], T], bottom: T, max_iter: int) -> FixpointReport:
    """Iterate ``step`` from ``bottom`` until the chain stabilizes exactly.

    The step must be monotone on a finite-height lattice for the result to be
    the least fixpoint above ``bottom``; the driver itself only detects
    stabilization (by equality, no tolerance).  Non-stabilization within
    ``max_iter`` applications is reported, never silently truncated.
    """
    current = bottom
    for i in range(1, max_iter + 1):
        nxt = step(current)
        if nxt == current:
            return FixpointReport(iterations=i, stabilized=True, table=current)
        current = nxt
    return FixpointReport(iterations=max_iter, stabilized=False, table=current)


def directed_hausdorff(
    d: Callable[[T, U], UnitValue], us: Iterable[T], vs: Iterable[U]
) -> UnitValue:
    """sup over ``us`` of inf over ``vs`` of ``d``.

    Empty ``us`` gives 0 (empty sup); nonempty ``us`` with empty ``vs`` gives
    1 (empty inf is top).
    """
    vs = tuple(vs)
    return join_all(meet_all(d(u, v) for v in vs) for u in us)


def hausdorff(d: Callable[[T, T], UnitValue], us: Iterable[T], vs: Iterable[T]) -> UnitValue:
    """Symmetric Hausdorff lifting: max of the two directed values."""
    us = tuple(us)
    vs = tuple(vs)
    return max(directed_hausdorff(d, us, vs), directed_hausdorff(d, vs, us))


def relation_lift(
    related: Callable[[T, T], bool], mode: str = "directed"
) -> Callable[[Iterable[T], Iterable[T]], bool]:
    """Lift a relation on points to a relation on finite subsets.

    Directed mode: X1 lifted-related X2 iff every element of X1 has a related
    partner in X2 (vacuously true for empty X1).  Symmetric mode intersects
    both directions.
    """

    def directed(xs: Iterable[T], ys: Iterable[T]) -> bool:
        ys = tuple(ys)
        return all(any(related(x, y) for y in ys) for x in xs)

    if mode == "directed":
        return directed
    if mode == "symmetric":

        def symmetric(xs: Iterable[T], ys: Iterable[T]) -> bool:
            xs = tuple(xs)
            ys = tuple(ys)
            return directed(xs, ys) and all(
                any(related(y, x) for x in xs) for y in ys
            )

        return symmetric
    raise ValueError(f"unknown lifting mode {mode!r}")


def require_stabilized(report: FixpointReport, what: str) -> FixpointReport:
    """Fail loudly when an iteration did not reach its fixpoint."""
    if not report.stabilized:
        raise FixpointError(
            f"{what} did not stabilize within {report.iterations} iterations"
        )
    return report
