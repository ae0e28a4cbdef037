"""Command line front end.

Every command reads a problem file (see :mod:`congestfair.io`) and prints a
report.  ``--format machine`` switches to one ``key=value`` pair per line,
with rationals as ``p/q``, vectors space separated in post or agent order,
and assignments as ``post:agent,agent`` tokens.

Exit codes: 0 success, 1 error, 2 infeasible or nothing found, 3 search
limit exceeded.
"""
from __future__ import annotations

import argparse
import sys

from .competitive import (
    compare_competitive,
    find_competitive,
    find_fm_equilibrium,
    is_competitive,
    is_fm_equilibrium,
)
from .equilibrium import SolverError
from .fractional import certify_lottery, decompose, solve_competitive
from .guarantees import (
    LimitExceeded,
    anonymous_prefixes,
    cmax,
    enumerate_top_fair,
    greedy_top_fair,
    is_top_fair,
    prefix_profile,
    unique_congestion_test,
)
from .io import format_assignment, parse, parse_assignment, parse_lottery
from .model import ModelError, fmt
from .weighted import birkhoff_decompose, fairness_violation_report, solve_weighted_competitive

OK, ERROR, NOT_FOUND, LIMIT = 0, 1, 2, 3


class Report:
    """Ordered key/value pairs rendered as text or machine lines."""

    def __init__(self):
        self.rows: list[tuple[str, str]] = []

    def add(self, key: str, value) -> None:
        if isinstance(value, (list, tuple)):
            value = " ".join(fmt(v) if not isinstance(v, str) else v for v in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif not isinstance(value, str):
            value = fmt(value)
        self.rows.append((key, value))

    def render(self, machine: bool) -> str:
        if machine:
            return "".join(f"{k}={v}\n" for k, v in self.rows)
        width = max((len(k) for k, _ in self.rows), default=0)
        return "".join(f"{k.ljust(width)} = {v}\n" for k, v in self.rows)


def _lottery_rows(rep: Report, problem, lottery, prefix="entry"):
    for k, (P, p) in enumerate(lottery):
        rep.add(f"{prefix}.{k}.prob", p)
        rep.add(f"{prefix}.{k}.assignment", format_assignment(problem, P))
        rep.add(f"{prefix}.{k}.congestion", P.congestion(problem))


def _need_assignment(args, problem):
    if not args.assignment:
        raise ModelError("this command needs --assignment 'post:agent,... post:agent,...'")
    return parse_assignment(problem, args.assignment)


def cmd_prefixes(problem, args, rep):
    caps = prefix_profile(problem)
    rep.add("posts", list(problem.posts))
    for i, label in enumerate(problem.agents):
        rep.add(f"prefix.{label}", caps[i])
        if not problem.weighted and (problem.prefixes is None or problem.prefixes[i] is None):
            fam = anonymous_prefixes(problem.preferences[i], problem.n, limit=args.limit)
            if fam.count > 1:
                rep.add(f"prefix_count.{label}", fam.count)
    if not problem.weighted:
        rep.add("cmax", [cmax(problem, caps, a) for a in range(problem.m)])
        rep.add("unique_congestion", unique_congestion_test(problem, caps))
    return OK


def cmd_topfair(problem, args, rep):
    caps = prefix_profile(problem)
    if args.action == "greedy":
        P = greedy_top_fair(problem, caps)
        rep.add("assignment", format_assignment(problem, P))
        rep.add("congestion", P.congestion(problem))
        return OK
    if args.action == "enumerate":
        found = enumerate_top_fair(problem, caps, limit=args.limit)
        rep.add("assignments", len(found.assignments))
        rep.add("congestion_profiles", len(found.congestions))
        for k, s in enumerate(sorted(found.congestions, reverse=True)):
            rep.add(f"profile.{k}", s)
        if args.list:
            for k, P in enumerate(found.assignments):
                rep.add(f"assignment.{k}", format_assignment(problem, P))
        return OK if found.assignments else NOT_FOUND
    P = _need_assignment(args, problem)
    ok = is_top_fair(problem, caps, P)
    rep.add("top_fair", ok)
    return OK if ok else NOT_FOUND


def cmd_competitive(problem, args, rep):
    if args.action == "check":
        P = _need_assignment(args, problem)
        ok = is_competitive(problem, P)
        rep.add("competitive", ok)
        return OK if ok else NOT_FOUND
    found = find_competitive(problem, limit=args.limit)
    rep.add("count", len(found))
    for k, P in enumerate(found):
        rep.add(f"assignment.{k}", format_assignment(problem, P))
        if problem.cardinal:
            rep.add(f"utilities.{k}", P.utilities(problem))
    if len(found) > 1:
        agree = all(compare_competitive(problem, found[0], Q, check_semi_strict=False).ok for Q in found[1:])
        rep.add("agree", agree)
    return OK if found else NOT_FOUND


def cmd_fmeq(problem, args, rep):
    if args.assignment:
        P = parse_assignment(problem, args.assignment)
        ok = is_fm_equilibrium(problem, P)
        rep.add("fm_equilibrium", ok)
        return OK if ok else NOT_FOUND
    P = find_fm_equilibrium(problem, seed=args.seed)
    if P is None:
        rep.add("fm_equilibrium", "none")
        return NOT_FOUND
    rep.add("assignment", format_assignment(problem, P))
    rep.add("congestion", P.congestion(problem))
    return OK


def _solution_rows(problem, sol, rep):
    rep.add("sigma", sol.sigma)
    for i, label in enumerate(problem.agents):
        rep.add(f"demand.{label}", [problem.posts[x] for x in sorted(sol.demands[i])])
    for i, label in enumerate(problem.agents):
        rep.add(f"pi.{label}", sol.pi.rows[i])


def cmd_solve_frac(problem, args, rep):
    sol = solve_competitive(problem)
    _solution_rows(problem, sol, rep)
    impl = decompose(sol, seed=args.seed)
    rep.add("lottery", ", ".join(fmt(p) for _, p in impl.lottery))
    _lottery_rows(rep, problem, impl.lottery)
    rep.add("rounding_ok", impl.rounding_ok)
    return OK


def cmd_decompose(problem, args, rep):
    if problem.weighted:
        lottery = birkhoff_decompose(solve_weighted_competitive(problem), seed=args.seed)
    else:
        lottery = decompose(solve_competitive(problem), seed=args.seed).lottery
    rep.add("entries", len(lottery))
    _lottery_rows(rep, problem, lottery)
    return OK


def cmd_verify_t1(problem, args, rep):
    sol = solve_competitive(problem)
    if args.lottery:
        lottery = parse_lottery(problem, args.lottery)
        bounds = certify_lottery(problem, lottery, sol)
    else:
        lottery = decompose(sol, seed=args.seed).lottery
        bounds = certify_lottery(problem, lottery, sol)
    rep.add("sigma", sol.sigma)
    for name, value in bounds.clauses.items():
        rep.add(f"clause.{name}", "n/a" if value is None else value)
    m, k, i = bounds.max_margin()
    rep.add("fair_margin", m)
    rep.add("fair_margin.entry", str(k))
    rep.add("fair_margin.agent", problem.agents[i])
    rep.add("fair_margin.post", problem.posts[lottery.entries[k][0].placement[i]])
    for k, msg in enumerate(bounds.failures):
        rep.add(f"failure.{k}", msg)
    return OK if bounds.ok else NOT_FOUND


def cmd_solve_weighted(problem, args, rep):
    sol = solve_weighted_competitive(problem)
    _solution_rows(problem, sol, rep)
    rep.add("f_crowded", sol.f_crowded)
    lottery = birkhoff_decompose(sol, seed=args.seed)
    rep.add("lottery", ", ".join(fmt(p) for _, p in lottery))
    _lottery_rows(rep, problem, lottery)
    return OK


def cmd_report(problem, args, rep):
    """Prefix table, a top-fair assignment and the competitive picture in one go."""
    caps = prefix_profile(problem)
    rep.add("model", "weighted" if problem.weighted else "anonymous")
    rep.add("posts", list(problem.posts))
    if problem.weighted:
        rep.add("total_weight", problem.total)
    for i, label in enumerate(problem.agents):
        rep.add(f"prefix.{label}", caps[i])
    P = greedy_top_fair(problem, caps)
    rep.add("greedy", format_assignment(problem, P))
    if args.lottery:
        lottery = parse_lottery(problem, args.lottery)
        vr = fairness_violation_report(problem, lottery, caps)
        for k, (Q, p) in enumerate(lottery):
            rep.add(f"entry.{k}.prob", p)
            rep.add(f"entry.{k}.assignment", format_assignment(problem, Q))
            rep.add(f"entry.{k}.top_fair", vr.fair[k])
        rep.add("expected_congestion", lottery.expected_congestion(problem))
        rep.add("violation_probability", vr.violation_probability)
        return OK
    if problem.cardinal and (problem.weighted or all(hasattr(u, "values") for u in problem.preferences)):
        sol = solve_weighted_competitive(problem) if problem.weighted else solve_competitive(problem)
        rep.add("sigma", sol.sigma)
        if problem.weighted:
            rep.add("f_crowded", sol.f_crowded)
            lottery = birkhoff_decompose(sol, seed=args.seed)
            vr = fairness_violation_report(problem, lottery, caps)
            _lottery_rows(rep, problem, lottery)
            rep.add("violation_probability", vr.violation_probability)
        else:
            impl = decompose(sol, seed=args.seed)
            _lottery_rows(rep, problem, impl.lottery)
            rep.add("fair_margin", certify_lottery(problem, impl).max_margin()[0])
    return OK


COMMANDS = {
    "prefixes": cmd_prefixes,
    "topfair": cmd_topfair,
    "competitive": cmd_competitive,
    "fmeq": cmd_fmeq,
    "solve-frac": cmd_solve_frac,
    "decompose": cmd_decompose,
    "verify-t1": cmd_verify_t1,
    "solve-weighted": cmd_solve_weighted,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "machine"), default="text")
    common.add_argument("--seed", type=int, default=None, help="randomise search order")
    common.add_argument("--limit", type=int, default=100_000, help="enumeration cap")
    common.add_argument("--assignment", help="assignment as 'post:agent,agent post:agent'")
    common.add_argument("--lottery", help="lottery file, one 'prob assignment' per line")

    parser = argparse.ArgumentParser(prog="congestfair", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    def add(name, help, actions=None):
        sp = sub.add_parser(name, parents=[common], help=help)
        if actions:
            sp.add_argument("action", choices=actions)
        sp.add_argument("file", help="problem file")
        return sp

    add("prefixes", "prefix caps per agent")
    tf = add("topfair", "top-fair assignments", ("greedy", "enumerate", "check"))
    tf.add_argument("--list", action="store_true", help="list every enumerated assignment")
    add("competitive", "deterministic competitive assignments", ("check", "find"))
    add("fmeq", "check or find a free-mobility equilibrium")
    add("solve-frac", "fractional competitive congestion and lottery")
    add("decompose", "lottery implementing the competitive congestion")
    add("verify-t1", "certify the approximation bounds of a lottery")
    add("solve-weighted", "weighted competitive congestion")
    add("report", "summary report")
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    rep = Report()
    try:
        problem = parse(args.file)
        code = COMMANDS[args.command](problem, args, rep)
    except LimitExceeded as exc:
        out.write(rep.render(args.format == "machine"))
        err.write(f"limit exceeded: {exc} (partial count {exc.count})\n")
        return LIMIT
    except (ModelError, SolverError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return ERROR
    out.write(rep.render(args.format == "machine"))
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
