"""Weighted fractional competitive congestion.

Agents carry weights, congestion at a post is the weight it hosts, and an
empty post is priced at the agent's own weight.  The solver is shared with
the anonymous case; what differs is the decomposition, which only keeps
agents inside their demand sets and gives no rounding guarantee on loads.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .decompose import decompose_matrix
from .equilibrium import CompetitiveSolution, solve
from .guarantees import prefix_profile
from .model import Lottery, ModelError, Problem, StochasticMatrix


def solve_weighted_competitive(problem: Problem) -> CompetitiveSolution:
    """Competitive congestion of a weighted problem; see ``f_crowded`` on the result.

    When the result is f-crowded it is the only f-crowded competitive
    congestion; otherwise other competitive congestions may exist.
    """
    if not problem.weighted:
        raise ModelError("use solve_competitive for anonymous problems")
    return solve(problem)


def birkhoff_decompose(source: CompetitiveSolution | StochasticMatrix | Sequence, seed: int | None = None) -> Lottery:
    """Write a row-stochastic matrix as a lottery over deterministic assignments.

    Every assignment keeps agents on the matrix's support; loads are not
    constrained.  ``seed`` randomises the walk order.
    """
    if isinstance(source, CompetitiveSolution):
        rows = source.pi.rows
    elif isinstance(source, StochasticMatrix):
        rows = source.rows
    else:
        rows = StochasticMatrix(tuple(tuple(r) for r in source)).rows
    return Lottery(tuple(decompose_matrix(rows, None, seed=seed))).merged()


@dataclass(frozen=True)
class ViolationReport:
    """Top-fairness of each lottery entry and the probability of a violation.

    ``margins[k]`` is the largest excess of load over an occupant's cap in
    entry k (zero or negative when the entry is top-fair).
    """

    fair: tuple[bool, ...]
    margins: tuple[Fraction, ...]
    probabilities: tuple[Fraction, ...]

    @property
    def violation_probability(self) -> Fraction:
        return sum((p for f, p in zip(self.fair, self.probabilities) if not f), Fraction(0))

    @property
    def worst_margin(self) -> Fraction:
        return max(self.margins)


def fairness_violation_report(problem: Problem, lottery: Lottery, caps=None) -> ViolationReport:
    caps = prefix_profile(problem) if caps is None else caps
    fair, margins, probs = [], [], []
    for P, p in lottery:
        s = P.congestion(problem)
        excess = max(s[a] - caps[i][a] for i, a in enumerate(P.placement))
        fair.append(excess <= 0)
        margins.append(excess)
        probs.append(p)
    return ViolationReport(tuple(fair), tuple(margins), tuple(probs))
