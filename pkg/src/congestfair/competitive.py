"""Deterministic competitive assignments and free-mobility equilibria.

Congestion works as a price: an agent demands the posts that are best at
their current congestion, with empty or light posts priced at the agent's
own weight (1 in the anonymous model).
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

from .flow import b_matching, b_matchings
from .guarantees import LimitExceeded, compositions
from .model import Assignment, ModelError, Problem


def demand_det(problem: Problem, s: Sequence, i: int) -> frozenset[int]:
    """Posts maximising agent i's preference at the clamped congestion ``s_x ∨ w_i``."""
    floor = problem.floor(i)
    keys = [problem.utility(i, x, max(s[x], floor)) for x in range(problem.m)]
    best = max(keys)
    return frozenset(x for x, k in enumerate(keys) if k == best)


def is_competitive(problem: Problem, P: Assignment) -> bool:
    P.validate(problem)
    s = P.congestion(problem)
    return all(a in demand_det(problem, s, i) for i, a in enumerate(P.placement))


def _all_assignments(problem: Problem, limit: int):
    if problem.m ** problem.n > limit:
        raise LimitExceeded(
            f"{problem.m}^{problem.n} assignments exceed the search limit {limit}", 0
        )
    for placement in product(range(problem.m), repeat=problem.n):
        yield Assignment(placement)


def find_competitive(problem: Problem, limit: int = 10_000) -> list[Assignment]:
    """Every competitive assignment, in lexicographic order of placements.

    Anonymous problems loop over congestion profiles and match agents into
    their demand sets; weighted ones fall back to exhaustive search.
    """
    found = []
    if problem.weighted:
        for P in _all_assignments(problem, max(limit, 10 ** 6)):
            if is_competitive(problem, P):
                found.append(P)
                if len(found) > limit:
                    raise LimitExceeded(f"more than {limit} competitive assignments", len(found))
        return found
    for s in compositions(problem.n, problem.m):
        allowed = [demand_det(problem, s, i) for i in range(problem.n)]
        for placement in b_matchings(s, allowed, limit=limit + 1 - len(found)):
            found.append(Assignment(placement))
        if len(found) > limit:
            raise LimitExceeded(f"more than {limit} competitive assignments", len(found))
    found.sort()
    return found


@dataclass(frozen=True)
class AgreementReport:
    """Where two competitive assignments disagree.

    ``congestion`` lists posts whose loads differ while at least one side
    has two or more occupants.  ``welfare`` lists agents who are not
    indifferent between their two allocations.  ``semi_strict`` records the
    preference condition under which both lists are expected to be empty
    (``None`` when not evaluated).
    """

    congestion: tuple[int, ...]
    welfare: tuple[int, ...]
    semi_strict: bool | None

    @property
    def ok(self) -> bool:
        return not self.congestion and not self.welfare


def compare_competitive(problem: Problem, P1: Assignment, P2: Assignment, check_semi_strict: bool = True) -> AgreementReport:
    """Check that two competitive assignments share congestion and welfare."""
    for P in (P1, P2):
        if not is_competitive(problem, P):
            raise ModelError(f"{P.describe(problem)} is not competitive")
    s1, s2 = P1.congestion(problem), P2.congestion(problem)
    c1, c2 = P1.counts(problem.m), P2.counts(problem.m)
    posts = tuple(
        a for a in range(problem.m) if s1[a] != s2[a] and max(c1[a], c2[a]) >= 2
    )
    u1, u2 = P1.utilities(problem), P2.utilities(problem)
    agents = tuple(i for i in range(problem.n) if u1[i] != u2[i])
    semi = None
    if check_semi_strict and problem.n <= 12:
        semi = is_semi_strict(problem)
    return AgreementReport(posts, agents, semi)


def pareto_dominates(problem: Problem, Q: Assignment, P: Assignment) -> bool:
    uq, up = Q.utilities(problem), P.utilities(problem)
    return all(a >= b for a, b in zip(uq, up)) and any(a > b for a, b in zip(uq, up))


def _search_profile(problem: Problem, accept: Callable, limit: int):
    """First assignment in which each agent i gets a post passing ``accept(i, x, s)``.

    ``accept`` returns 0 (reject), 1 (weakly acceptable) or 2 (strictly
    better); when any agent can be strictly better we require one to be.
    Returns ``(assignment, strict)`` or ``None``.
    """
    n, m = problem.n, problem.m
    if problem.weighted:
        best = None
        for P in _all_assignments(problem, limit):
            s = P.congestion(problem)
            marks = [accept(i, x, s) for i, x in enumerate(P.placement)]
            if all(marks):
                if any(v == 2 for v in marks):
                    return P, True
                best = best or P
        return (best, False) if best else None
    weak = None
    for s in compositions(n, m):
        marks = [[accept(i, x, s) if s[x] > 0 else 0 for x in range(m)] for i in range(n)]
        allowed = [{x for x in range(m) if marks[i][x]} for i in range(n)]
        if any(not a for a in allowed):
            continue
        for j in range(n):
            for x in range(m):
                if marks[j][x] != 2:
                    continue
                forced = list(allowed)
                forced[j] = {x}
                placement = b_matching(s, forced)
                if placement is not None:
                    return Assignment(placement), True
        if weak is None:
            placement = b_matching(s, allowed)
            if placement is not None:
                weak = Assignment(placement)
    return (weak, False) if weak else None


def dominating_assignment(problem: Problem, base: Sequence, limit: int = 10 ** 6) -> Assignment | None:
    """An assignment whose utilities weakly beat ``base`` everywhere and strictly somewhere."""

    def accept(i, x, s):
        k = problem.utility(i, x, s[x])
        return 2 if k > base[i] else 1 if k == base[i] else 0

    hit = _search_profile(problem, accept, limit)
    if hit is None or not hit[1]:
        return None
    return hit[0]


def find_dominator(problem: Problem, P: Assignment, limit: int = 10 ** 6) -> Assignment | None:
    """A Pareto improvement on ``P``, or ``None`` if there is none."""
    return dominating_assignment(problem, P.utilities(problem), limit)


def exists_strict_improvement(problem: Problem, thresholds: Sequence, limit: int = 10 ** 6) -> Assignment | None:
    """An assignment giving every agent utility strictly above ``thresholds[i]``."""

    def accept(i, x, s):
        return 2 if problem.utility(i, x, s[x]) > thresholds[i] else 0

    hit = _search_profile(problem, accept, limit)
    return None if hit is None else hit[0]


def is_crowded(problem: Problem, P: Assignment) -> bool:
    return all(c != 1 for c in P.counts(problem.m))


def _subset_sums(values: Sequence[Fraction]) -> set[Fraction]:
    sums = {Fraction(0)}
    for v in values:
        sums |= {s + v for s in sums}
    return sums


def is_semi_strict(problem: Problem, max_agents: int = 12) -> bool:
    """No agent is indifferent between being alone somewhere and sharing elsewhere.

    Scans every agent, every pair of distinct posts and every group weight
    ``w_S`` with the agent in S.  Exponential in n, hence ``max_agents``.
    """
    if problem.n > max_agents:
        raise LimitExceeded(f"semi-strictness scan is capped at {max_agents} agents", 0)
    for i in range(problem.n):
        wi = problem.weight(i)
        others = [problem.weight(j) for j in range(problem.n) if j != i]
        loads = sorted(wi + s for s in _subset_sums(others))
        for a in range(problem.m):
            alone = problem.utility(i, a, wi)
            for b in range(problem.m):
                if b == a:
                    continue
                if any(problem.utility(i, b, z) == alone for z in loads):
                    return False
    return True


def is_fm_equilibrium(problem: Problem, P: Assignment) -> bool:
    """Nobody gains by moving, once their own weight is added at the destination."""
    P.validate(problem)
    s = P.congestion(problem)
    for i, x in enumerate(P.placement):
        here = problem.utility(i, x, s[x])
        wi = problem.weight(i)
        for a in range(problem.m):
            if a != x and problem.utility(i, a, s[a] + wi) > here:
                return False
    return True


def find_fm_equilibrium(problem: Problem, seed: int | None = None, max_sweeps: int = 1000, limit: int = 10 ** 6) -> Assignment | None:
    """Best-response dynamics in random sweep order, then exhaustive search."""
    rng = random.Random(seed)
    n, m = problem.n, problem.m
    placement = [max(range(m), key=lambda x: (problem.utility(i, x, problem.weight(i)), -x)) for i in range(n)]
    s = list(Assignment(tuple(placement)).congestion(problem))
    for _ in range(max_sweeps):
        moved = False
        order = list(range(n))
        rng.shuffle(order)
        for i in order:
            x, wi = placement[i], problem.weight(i)
            here = problem.utility(i, x, s[x])
            best, target = here, x
            for a in range(m):
                if a != x:
                    k = problem.utility(i, a, s[a] + wi)
                    if k > best:
                        best, target = k, a
            if target != x:
                s[x] -= wi
                s[target] += wi
                placement[i] = target
                moved = True
        if not moved:
            return Assignment(tuple(placement))
    for P in _all_assignments(problem, limit):
        if is_fm_equilibrium(problem, P):
            return P
    return None
