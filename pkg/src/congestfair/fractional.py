"""Anonymous fractional competitive congestion and its implementing lotteries.

``solve_competitive`` finds the competitive congestion sigma and a matrix
realising it.  ``decompose`` turns that matrix into a lottery over
deterministic assignments whose loads round sigma up or down, and
``certify_lottery`` checks the approximation guarantees such lotteries
carry.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor

from .competitive import dominating_assignment, exists_strict_improvement
from .decompose import decompose_matrix
from .equilibrium import (
    CompetitiveSolution,
    SolverError,
    clamped_utility,
    demand_frac,
    feasibility,
    solve,
)
from .guarantees import anonymous_prefixes
from .model import Assignment, Lottery, ModelError, Problem, TableUtility

__all__ = [
    "CompetitiveSolution",
    "ImplementationLottery",
    "BoundsReport",
    "SolverError",
    "certify_lottery",
    "decompose",
    "delta",
    "demand_frac",
    "feasibility",
    "solve_competitive",
]


def solve_competitive(problem: Problem) -> CompetitiveSolution:
    """The competitive congestion of an anonymous problem with cardinal utilities."""
    if problem.weighted:
        raise ModelError("use solve_weighted_competitive for weighted problems")
    if not all(isinstance(p, TableUtility) for p in problem.preferences):
        raise ModelError("fractional congestion needs cardinal utility tables")
    return solve(problem)


@dataclass(frozen=True)
class ImplementationLottery:
    """A lottery over deterministic assignments implementing sigma.

    ``congestions[k]`` is the load vector of the k-th entry and
    ``rounding_ok`` confirms that every entry keeps agents inside their
    demand sets with loads equal to floor or ceiling of sigma.
    """

    solution: CompetitiveSolution
    lottery: Lottery
    congestions: tuple[tuple[Fraction, ...], ...]
    rounding_ok: bool

    def __iter__(self):
        return iter(self.lottery)

    def __len__(self):
        return len(self.lottery)


def rounding_holds(sol: CompetitiveSolution, P: Assignment) -> bool:
    """Agents sit inside their demand sets and loads are floor or ceiling of sigma."""
    p = sol.problem
    if any(x not in sol.demands[i] for i, x in enumerate(P.placement)):
        return False
    s = P.congestion(p)
    return all(floor(sig) <= v <= ceil(sig) for v, sig in zip(s, sol.sigma))


def decompose(sol: CompetitiveSolution, seed: int | None = None) -> ImplementationLottery:
    """Peel deterministic extreme points off the realising matrix.

    Each extreme point keeps the matrix's support and rounds every column sum
    to floor or ceiling of sigma.  ``seed`` shuffles the walk order and may
    yield a different, equally valid lottery.
    """
    bounds = [(Fraction(floor(s)), Fraction(ceil(s))) for s in sol.sigma]
    entries = decompose_matrix(sol.pi.rows, bounds, seed=seed)
    lottery = Lottery(tuple(entries)).merged()
    p = sol.problem
    congestions = tuple(a.congestion(p) for a, _ in lottery)
    ok = all(rounding_holds(sol, a) for a, _ in lottery)
    if lottery.expected_congestion(p) != sol.sigma:
        raise AssertionError("decomposition lost mass; this is a bug")
    return ImplementationLottery(sol, lottery, congestions, ok)


def delta(u: TableUtility) -> Fraction:
    """Largest utility drop from one extra unit of congestion at any post."""
    return max(
        row[s] - row[s + 1] for row in u.values for s in range(len(row) - 1)
    ) if u.n > 1 else Fraction(0)


@dataclass(frozen=True)
class BoundsReport:
    """Per-clause outcome of the approximation checks for one lottery.

    ``fair_margin[k][i]`` is the load agent i sees in entry k minus the
    largest cap any of their prefixes grants at that post; the fairness
    clause allows at most 1.  ``failures`` lists human-readable violations.
    """

    fair_margin: tuple[tuple[Fraction, ...], ...]
    clauses: dict
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return all(v is not False for v in self.clauses.values())

    def max_margin(self):
        """``(margin, entry, agent)`` of the largest fairness margin."""
        return max(
            ((m, k, i) for k, row in enumerate(self.fair_margin) for i, m in enumerate(row)),
            key=lambda t: (t[0], -t[1], -t[2]),
        )


def certify_lottery(problem: Problem, impl: ImplementationLottery | Lottery, solution: CompetitiveSolution | None = None) -> BoundsReport:
    """Check every approximation guarantee an implementing lottery should satisfy.

    Clauses, each evaluated for every entry P^k with utility profile U^k:

    * ``fair``: each agent's load is within one unit of some prefix cap.
    * ``spread``: utilities across entries differ by at most 2 delta_i.
    * ``near_competitive``: U^k_i >= u_i(x, s^k_x ∨ 1) - 2 delta_i for all x.
    * ``near_efficient``: no assignment beats U^k + 2 delta for everyone.
    * ``competitive_floor`` (only if sigma >= 1 everywhere): U^k_i > U^c_i - delta_i
      (equality when delta_i = 0), and no assignment Pareto dominates U^c.
    """
    if isinstance(impl, ImplementationLottery):
        lottery, solution = impl.lottery, impl.solution
    else:
        lottery = impl
        if solution is None:
            solution = solve_competitive(problem)
    n, m = problem.n, problem.m
    deltas = [delta(p) for p in problem.preferences]
    top = [anonymous_prefixes(p, n).max_caps for p in problem.preferences]
    failures = []
    margins = []
    profiles = []
    near_comp = True
    near_eff = True
    for k, (P, _) in enumerate(lottery):
        s = P.congestion(problem)
        U = P.utilities(problem)
        profiles.append(U)
        margins.append(tuple(s[a] - top[i][a] for i, a in enumerate(P.placement)))
        for i, a in enumerate(P.placement):
            if margins[-1][i] > 1:
                failures.append(f"entry {k}: {problem.agents[i]} is {margins[-1][i]} above cap at {problem.posts[a]}")
            for x in range(m):
                if U[i] < problem.utility(i, x, max(s[x], 1)) - 2 * deltas[i]:
                    near_comp = False
                    failures.append(f"entry {k}: {problem.agents[i]} envies {problem.posts[x]} by more than 2 delta")
        thresholds = [U[i] + 2 * deltas[i] for i in range(n)]
        Q = exists_strict_improvement(problem, thresholds)
        if Q is not None:
            near_eff = False
            failures.append(f"entry {k}: {Q.describe(problem)} beats it by more than 2 delta for all")
    fair = all(v <= 1 for row in margins for v in row)
    spread = True
    for i in range(n):
        vals = [U[i] for U in profiles]
        if max(vals) - min(vals) > 2 * deltas[i]:
            spread = False
            failures.append(f"{problem.agents[i]}: utilities across entries spread more than 2 delta")
    clauses = {
        "fair": fair,
        "spread": spread,
        "near_competitive": near_comp,
        "near_efficient": near_eff,
        "competitive_floor": None,
    }
    if all(s >= 1 for s in solution.sigma):
        Uc = solution.utilities()
        # delta is 0 only for n = 1, where the entry is the competitive allocation
        floor_ok = all(
            U[i] > Uc[i] - deltas[i] or (deltas[i] == 0 and U[i] == Uc[i])
            for U in profiles
            for i in range(n)
        )
        if not floor_ok:
            failures.append("some entry falls delta or more below the competitive utility")
        dom = dominating_assignment(problem, Uc)
        if dom is not None:
            failures.append(f"{dom.describe(problem)} Pareto dominates the competitive utilities")
        clauses["competitive_floor"] = floor_ok and dom is None
    return BoundsReport(tuple(margins), clauses, tuple(failures))

