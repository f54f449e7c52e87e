"""Command line front end.

Subcommands: ``equiv`` (qualitative relations), ``dist`` (exact distances),
``verify`` (cross-validation suites), ``eval`` (formula evaluation).  Output
is line-oriented TSV by default, one JSON object with ``--json``; distances
are always printed as exact rationals ``p/q``.  Exit codes: 0 success, 1
usage or parse error, 2 verification failure, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import game as game_mod
from . import logic as logic_mod
from . import oracle as oracle_mod
from . import qualitative as qual
from . import quantitative as quant
from .core import FixpointError, parse_unit, require_stabilized
from .lts import Mts, MtsError, members, model_digest, parse_mts

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_BUDGET = 3

EQUIV_SEMANTICS = (
    "bisim",
    "sim",
    "trace",
    "completed",
    "failure",
    "ready",
    "possible-futures",
)

DIST_SEMANTICS = {
    "bisim-m": None,
    "sim-m": None,
    "trace-m": None,
    "completed-m": "completed",
    "failure-disc": "failure_discrete",
    "failure-haus": "failure_hausdorff",
    "failure-pseudo": "failure_pseudo_hausdorff",
    "ready-disc": "ready_discrete",
    "ready-haus": "ready_hausdorff",
    "possible-futures-m": "possible_futures",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: A003 - argparse API
        raise _UsageError(message)


class Report:
    """Accumulates deterministic rows plus bookkeeping for one command."""

    def __init__(self, args, m: Mts, semantics: str | None = None):
        command = " ".join(getattr(args, "argv", [args.subcommand]))
        self.payload: dict = {"command": command, "model": model_digest(m)}
        if semantics:
            self.payload["semantics"] = semantics
        self.rows: list[list[str]] = []
        self.iterations = 0
        self.failures = 0

    def row(self, *fields: object) -> None:
        self.rows.append([str(f) for f in fields])

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.failures += 0 if ok else 1
        self.row("check", name, "pass" if ok else "fail", detail)

    def count(self, report) -> None:
        self.iterations += report.iterations

    def emit(self, as_json: bool) -> None:
        self.payload["iterations"] = self.iterations
        self.payload["rows"] = self.rows
        if as_json:
            print(json.dumps(self.payload, sort_keys=True))
            return
        for key in ("command", "model", "semantics"):
            if key in self.payload:
                print(f"{key}\t{self.payload[key]}")
        for row in self.rows:
            print("\t".join(row))
        print(f"iterations\t{self.iterations}")


def _load(path: str) -> Mts:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_mts(handle.read())


def _parse_set(m: Mts, expr: str) -> int:
    expr = expr.strip()
    if not (expr.startswith("{") and expr.endswith("}")):
        raise MtsError(f"state set expression must look like {{x,y}}: {expr!r}")
    names = [s.strip() for s in expr[1:-1].split(",") if s.strip()]
    return m.state_set(names)


def _parse_pairs(m: Mts, text: str) -> list[tuple[int, int]]:
    pairs = []
    for chunk in text.split(","):
        left, sep, right = chunk.partition(":")
        if not sep:
            raise MtsError(f"pair must look like x:y: {chunk!r}")
        pairs.append((m.state_index(left.strip()), m.state_index(right.strip())))
    return pairs


def _cmd_equiv(args) -> int:
    m = _load(args.file)
    report = Report(args, m, args.semantics)
    if args.pairs:
        wanted = _parse_pairs(m, args.pairs)
    else:
        n = m.n_states
        wanted = [(i, j) for i in range(n) for j in range(n)]
    table = qual.state_equivalence(m, args.semantics, args.max_iter)
    for i, j in wanted:
        verdict = "related" if table.related(i, j) else "not-related"
        report.row("pair", m.states[i], m.states[j], verdict)
    report.emit(args.json)
    return EXIT_OK


def _distance(
    m: Mts,
    semantics: str,
    mask1: int,
    mask2: int,
    strategy: str,
    max_iter: int | None = None,
):
    if semantics in ("bisim-m", "sim-m"):
        fix = (
            quant.bisim_metric_fixpoint(m, max_iter)
            if semantics == "bisim-m"
            else quant.dir_sim_metric_fixpoint(m, max_iter)
        )
        require_stabilized(fix, semantics)
        ones = list(members(mask1)), list(members(mask2))
        if len(ones[0]) != 1 or len(ones[1]) != 1:
            raise MtsError(f"{semantics} compares single states, not sets")
        return fix.table.at(ones[0][0], ones[1][0]), fix
    if semantics == "trace-m":
        fix = quant.dir_trace_metric_fixpoint(m, mask1, mask2, strategy, max_iter)
        require_stabilized(fix, semantics)
        return fix.table.value(mask1, mask2), fix
    kind = DIST_SEMANTICS[semantics]
    d0 = quant.decorated_d0(m, kind, strategy)
    fix = quant.decorated_trace_metric_fixpoint(m, mask1, mask2, d0, strategy, max_iter)
    require_stabilized(fix, semantics)
    return fix.table.value(mask1, mask2), fix


def _cmd_dist(args) -> int:
    m = _load(args.file)
    strategy = "brute" if args.brute_delta else "threshold"
    mask1 = _parse_set(m, getattr(args, "from"))
    mask2 = _parse_set(m, args.to)
    report = Report(args, m, args.semantics)
    value, fix = _distance(m, args.semantics, mask1, mask2, strategy, args.max_iter)
    report.count(fix)
    report.row("distance", value)
    report.emit(args.json)
    return EXIT_OK


def _cmd_eval(args) -> int:
    m = _load(args.file)
    report = Report(args, m, args.fragment)
    phi = logic_mod.parse_formula(args.formula, args.fragment)
    denotation = logic_mod.eval_formula(m, phi, args.fragment)
    if isinstance(denotation, int):
        for x, name in enumerate(m.states):
            report.row("state", name, "1" if denotation >> x & 1 else "0")
    else:
        for name, v in zip(m.states, denotation):
            report.row("state", name, v)
    report.emit(args.json)
    return EXIT_OK


def _verify_oracle(m: Mts, args, report: Report) -> None:
    max_len = args.max_len
    longest = m.longest_path()
    exact = longest is not None and longest <= max_len
    if longest is not None:
        max_len = min(max_len, longest)
    strategy = "brute" if args.brute_delta else "threshold"
    n = m.n_states
    pairs = [(1 << i, 1 << j) for i in range(n) for j in range(n)]
    pairs.append((m.full_mask, m.full_mask))
    for mask1, mask2 in pairs:
        fix = quant.dir_trace_metric_fixpoint(m, mask1, mask2, strategy)
        require_stabilized(fix, "trace metric")
        report.count(fix)
        value = fix.table.value(mask1, mask2)
        reference = oracle_mod.trace_hausdorff_oracle(m, mask1, mask2, max_len)
        name = f"trace-oracle:{mask1:x}:{mask2:x}"
        if exact:
            report.check(name, value == reference, f"{value} vs {reference}")
        else:
            report.check(name, reference <= value, f"{reference} <= {value}")
    for kind in quant.DECORATED_METRIC_KINDS:
        d0 = quant.decorated_d0(m, kind, strategy)
        for mask1, mask2 in pairs[: n * n]:
            fix = quant.decorated_trace_metric_fixpoint(m, mask1, mask2, d0, strategy)
            require_stabilized(fix, "decorated trace metric")
            report.count(fix)
            value = fix.table.value(mask1, mask2)
            reference = quant.eps_characterization(m, mask1, mask2, d0, max_len)
            name = f"eps-oracle:{kind}:{mask1:x}:{mask2:x}"
            if exact:
                report.check(name, value == reference, f"{value} vs {reference}")
            else:
                report.check(name, reference <= value, f"{reference} <= {value}")
    for kind in qual.DECORATED_KINDS:
        base = qual.decorated_base(m, kind)
        for mask1, mask2 in pairs[: n * n]:
            related = qual.decorated_trace_related(m, mask1, mask2, base)
            bounded = oracle_mod.omega_oracle(m, mask1, mask2, base.related, max_len)
            name = f"omega-oracle:{kind}:{mask1:x}:{mask2:x}"
            if exact:
                report.check(name, related == bounded, f"{related} vs {bounded}")
            else:
                report.check(name, (not related) or bounded, f"{related} -> {bounded}")


def _verify_hm(m: Mts, args, report: Report) -> None:
    grid = None
    if args.shift_grid:
        grid = logic_mod.default_shift_grid(m, int(args.shift_grid))
    hm = logic_mod.hm_cross_check(m, args.fragment, args.depth, grid)
    for it in hm.iterates:
        if it.equal is not None:
            report.check(f"hm:{args.fragment}:k={it.k}", it.equal)
        else:
            report.check(f"hm-sound:{args.fragment}:k={it.k}", bool(it.sound))
    if hm.final_equal is not None and hm.fragment != "bisim-m":
        report.check(f"hm-final:{args.fragment}", hm.ok, f"equal={hm.final_equal}")
    if hm.gap is not None:
        report.row("gap", hm.gap)


def _verify_game(m: Mts, args, report: Report) -> None:
    if args.epsilon is None:
        raise MtsError("the game suite needs --epsilon")
    eps = parse_unit(args.epsilon)
    mask1 = _parse_set(m, getattr(args, "from")) if getattr(args, "from") else m.full_mask
    mask2 = _parse_set(m, args.to) if args.to else m.full_mask
    result = game_mod.solve_game(m, mask1, mask2, eps, prune=not args.brute_delta)
    report.row("game", result.winner)
    fix = quant.dir_trace_metric_fixpoint(m, mask1, mask2)
    require_stabilized(fix, "trace metric")
    report.count(fix)
    value = fix.table.value(mask1, mask2)
    report.check("game-consistent", result.maiden_wins == (value <= eps), f"d_T={value}")


def _verify_hierarchy(m: Mts, args, report: Report) -> None:
    tables = {
        sem: qual.state_equivalence(m, sem)
        for sem in ("bisim", "possible-futures", "ready", "failure", "completed", "trace")
    }
    chain = ("bisim", "possible-futures", "ready", "failure", "completed", "trace")
    n = m.n_states
    for finer, coarser in zip(chain, chain[1:]):
        ok = all(
            not tables[finer].related(i, j) or tables[coarser].related(i, j)
            for i in range(n)
            for j in range(n)
        )
        report.check(f"hierarchy:{finer}->{coarser}", ok)
    strategy = "brute" if args.brute_delta else "threshold"
    d0s = {kind: quant.decorated_d0(m, kind, strategy) for kind in quant.DECORATED_METRIC_KINDS}
    values: dict[str, dict[tuple[int, int], object]] = {"trace": {}}
    pairs = [(i, j) for i in range(n) for j in range(n)]
    for i, j in pairs:
        values["trace"][(i, j)] = quant.dir_trace_metric(m, 1 << i, 1 << j, strategy)
    for kind, d0 in d0s.items():
        values[kind] = {
            (i, j): quant.decorated_trace_metric(m, 1 << i, 1 << j, d0, strategy)
            for i, j in pairs
        }
    quant_chain = (
        ("trace", "completed"),
        ("completed", "failure_hausdorff"),
        ("failure_hausdorff", "ready_hausdorff"),
        ("ready_hausdorff", "possible_futures"),
        ("failure_hausdorff", "failure_discrete"),
        ("failure_discrete", "ready_discrete"),
    )
    for lower, upper in quant_chain:
        ok = all(values[lower][p] <= values[upper][p] for p in pairs)
        report.check(f"hierarchy-m:{lower}<={upper}", ok)
    bisim_table = quant.bisim_metric(m)
    ok = all(
        max(values["possible_futures"][(i, j)], values["possible_futures"][(j, i)])
        <= bisim_table.at(i, j)
        for i, j in pairs
    )
    report.check("hierarchy-m:possible_futures<=bisim", ok)


def _cmd_verify(args) -> int:
    m = _load(args.file)
    report = Report(args, m, args.suite)
    if args.suite == "oracle":
        _verify_oracle(m, args, report)
    elif args.suite == "hm":
        _verify_hm(m, args, report)
    elif args.suite == "game":
        _verify_game(m, args, report)
    elif args.suite == "hierarchy":
        _verify_hierarchy(m, args, report)
    else:
        raise MtsError(f"unknown suite {args.suite!r}")
    report.emit(args.json)
    return EXIT_VERIFY if report.failures else EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="ltsmet", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_equiv = sub.add_parser("equiv", help="qualitative equivalence/preorder")
    p_equiv.add_argument("file")
    p_equiv.add_argument("semantics", choices=EQUIV_SEMANTICS)
    p_equiv.add_argument("--pairs", help="comma-separated x:y pairs")
    p_equiv.add_argument("--json", action="store_true")
    p_equiv.add_argument("--max-iter", type=int, default=None)
    p_equiv.set_defaults(func=_cmd_equiv)

    p_dist = sub.add_parser("dist", help="exact behavioural distance")
    p_dist.add_argument("file")
    p_dist.add_argument("semantics", choices=sorted(DIST_SEMANTICS))
    p_dist.add_argument("--from", required=True, help="state set, e.g. {x,y}")
    p_dist.add_argument("--to", required=True, help="state set, e.g. {y}")
    p_dist.add_argument("--brute-delta", action="store_true")
    p_dist.add_argument("--json", action="store_true")
    p_dist.add_argument("--max-iter", type=int, default=None)
    p_dist.set_defaults(func=_cmd_dist)

    p_verify = sub.add_parser("verify", help="cross-validation suites")
    p_verify.add_argument("file")
    p_verify.add_argument("suite", choices=("oracle", "hm", "game", "hierarchy"))
    p_verify.add_argument("--epsilon")
    p_verify.add_argument("--fragment", choices=logic_mod.FRAGMENTS, default="bisim-q")
    p_verify.add_argument("--depth", type=int, default=2)
    p_verify.add_argument("--shift-grid", help="grid denominator q")
    p_verify.add_argument("--max-len", type=int, default=8)
    p_verify.add_argument("--from", default="", help="state set for the game")
    p_verify.add_argument("--to", default="", help="state set for the game")
    p_verify.add_argument("--brute-delta", action="store_true")
    p_verify.add_argument("--json", action="store_true")
    p_verify.set_defaults(func=_cmd_verify)

    p_eval = sub.add_parser("eval", help="evaluate a modal formula")
    p_eval.add_argument("file")
    p_eval.add_argument("fragment", choices=logic_mod.FRAGMENTS)
    p_eval.add_argument("formula")
    p_eval.add_argument("--json", action="store_true")
    p_eval.set_defaults(func=_cmd_eval)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.argv = list(argv) if argv is not None else sys.argv[1:]
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MtsError, ValueError, FixpointError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (logic_mod.SaturationBudgetError, oracle_mod.OracleBudgetError) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
