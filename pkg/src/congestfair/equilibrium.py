"""Fractional competitive congestion: shared solver for both congestion models.

An agent of weight w splits one unit of probability over the posts that
maximise ``u(x, sigma_x ∨ floor)``; a congestion vector sigma is competitive
when those demands can be chosen so that the expected loads reproduce sigma.

The solver works in two stages:

1. A logit-smoothed version of the fixed point is tracked numerically
   (damped Newton) while the temperature shrinks towards zero.  This only
   serves to locate the right linear piece of the problem.
2. Around the numeric point we guess, for each post, the linear piece of the
   utilities and, for each agent, the posts they use; those guesses define a
   small exact LP whose solution is verified from scratch.

If no guess near the numeric point verifies, an exhaustive search over
linear pieces and supports takes over.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

import numpy as np

from .flow import transport
from .lp import feasible_point
from .model import (
    ModelError,
    PiecewiseUtility,
    Problem,
    StochasticMatrix,
    TableUtility,
    fmt,
)

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """No competitive congestion was found.  ``diagnostics`` holds the search trail."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------------------
# exact helpers
# ---------------------------------------------------------------------------


def _pieces(problem: Problem, i: int):
    pref = problem.preferences[i]
    if isinstance(pref, TableUtility):
        return pref.as_piecewise().pieces
    if isinstance(pref, PiecewiseUtility):
        return pref.pieces
    raise ModelError("fractional congestion needs cardinal utilities")


def clamped_utility(problem: Problem, i: int, x: int, sigma) -> Fraction:
    """``u_i(x, sigma ∨ floor_i)``, exact."""
    return problem.preferences[i](x, max(Fraction(sigma), problem.floor(i)))


def demand_frac(problem: Problem, sigma: Sequence, i: int) -> frozenset[int]:
    """Posts maximising agent i's utility at the clamped fractional congestion."""
    vals = [clamped_utility(problem, i, x, sigma[x]) for x in range(problem.m)]
    best = max(vals)
    return frozenset(x for x, v in enumerate(vals) if v == best)


def feasibility(problem: Problem, sigma: Sequence, demands: Sequence) -> StochasticMatrix | None:
    """A row-stochastic matrix supported on ``demands`` whose weighted column sums are sigma."""
    supply = [problem.weight(i) for i in range(problem.n)]
    plan = transport(supply, [Fraction(s) for s in sigma], [sorted(d) for d in demands])
    if plan is None:
        return None
    return StochasticMatrix(
        tuple(tuple(Fraction(v) / supply[i] for v in row) for i, row in enumerate(plan))
    )


@dataclass(frozen=True)
class CompetitiveSolution:
    """A verified competitive congestion with its demand sets and realising matrix.

    ``ambiguous`` lists posts where the load is too light to be pinned down
    (at most one agent's weight), so a different but equally valid solution
    may report another value there.  ``residual`` is the exact difference
    between the matrix's weighted column sums and sigma; it is always zero.
    """

    problem: Problem = field(repr=False)
    sigma: tuple[Fraction, ...]
    demands: tuple[frozenset, ...]
    pi: StochasticMatrix
    ambiguous: tuple[int, ...]
    residual: tuple[Fraction, ...]

    @property
    def f_crowded(self) -> bool:
        """Every used post is loaded strictly beyond the weight of each agent demanding it."""
        p = self.problem
        return all(
            self.sigma[x] > p.weight(i)
            for i, d in enumerate(self.demands)
            for x in d
            if self.sigma[x] > 0
        )

    def utilities(self) -> tuple[Fraction, ...]:
        """Each agent's utility at the competitive congestion of any demanded post."""
        return tuple(
            clamped_utility(self.problem, i, next(iter(d)), self.sigma[next(iter(d))])
            for i, d in enumerate(self.demands)
        )

    def describe(self) -> str:
        p = self.problem
        return "sigma = " + " ".join(f"{p.posts[x]}:{fmt(s)}" for x, s in enumerate(self.sigma))


def verify(problem: Problem, sigma: Sequence[Fraction], pi: StochasticMatrix | None = None) -> CompetitiveSolution | None:
    """Recompute demands at sigma exactly and check it is realisable."""
    sigma = tuple(Fraction(s) for s in sigma)
    if any(s < 0 for s in sigma) or sum(sigma) != problem.total:
        return None
    demands = tuple(demand_frac(problem, sigma, i) for i in range(problem.n))
    if pi is not None:
        ok = all(x in demands[i] for i, row in enumerate(pi.rows) for x, v in enumerate(row) if v > 0)
        if not ok or pi.column_sums([problem.weight(i) for i in range(problem.n)]) != sigma:
            pi = None
    if pi is None:
        pi = feasibility(problem, sigma, demands)
        if pi is None:
            return None
    ws = [problem.weight(i) for i in range(problem.n)]
    residual = tuple(c - s for c, s in zip(pi.column_sums(ws), sigma))
    if problem.weighted:
        ambiguous = tuple(
            x for x in range(problem.m)
            if any(sigma[x] <= problem.weight(i) for i in range(problem.n) if x in demands[i])
        )
    else:
        ambiguous = tuple(x for x in range(problem.m) if sigma[x] <= 1)
    return CompetitiveSolution(problem, sigma, demands, pi, ambiguous, residual)


# ---------------------------------------------------------------------------
# numeric stage
# ---------------------------------------------------------------------------


class _Numeric:
    """Vectorised float view of the clamped utilities."""

    def __init__(self, problem: Problem):
        n, m = problem.n, problem.m
        self.total = float(problem.total)
        self.w = np.array([float(problem.weight(i)) for i in range(n)])
        rows = [_pieces(problem, i) for i in range(n)]
        K = max(2, max(len(r) for row in rows for r in row))
        Z = np.zeros((n, m, K))
        U = np.zeros((n, m, K))
        for i, row in enumerate(rows):
            for x, pts in enumerate(row):
                zs = [float(z) for z, _ in pts]
                us = [float(u) for _, u in pts]
                if len(zs) == 1:
                    zs, us = zs + [zs[0] + 1.0], us + [us[0] - 1.0]
                slope = (us[-1] - us[-2]) / (zs[-1] - zs[-2])
                while len(zs) < K:
                    zs.append(zs[-1] + 1.0)
                    us.append(us[-1] + slope)
                Z[i, x], U[i, x] = zs, us
        self.Z, self.U = Z, U
        self.slopes = np.diff(U, axis=2) / np.diff(Z, axis=2)
        spread = U.max() - U.min()
        self.scale = spread if spread > 0 else 1.0

    def values(self, sigma):
        s = np.clip(sigma, None, self.total)[None, :, None]
        Z, U = self.Z, self.U
        k = np.clip((Z <= s).sum(axis=2) - 1, 0, Z.shape[2] - 2)
        k = k[..., None]
        z0 = np.take_along_axis(Z, k, 2)[..., 0]
        u0 = np.take_along_axis(U, k, 2)[..., 0]
        g = np.take_along_axis(self.slopes, k, 2)[..., 0]
        below = sigma[None, :] <= Z[:, :, 0]
        g = np.where(below, 0.0, g)
        sv = np.maximum(np.broadcast_to(sigma[None, :], z0.shape), Z[:, :, 0])
        return u0 + g * (sv - z0), g

    def residual(self, sigma, tau):
        u, g = self.values(sigma)
        a = u / tau
        a -= a.max(axis=1, keepdims=True)
        p = np.exp(a)
        p /= p.sum(axis=1, keepdims=True)
        return (self.w[:, None] * p).sum(axis=0) - sigma, p, g

    def jacobian(self, p, g, tau):
        wp = self.w[:, None] * p
        # dF_x/dsigma_y = sum_i w_i p_ix (delta_xy - p_iy) g_iy / tau
        D = np.diag((wp * g).sum(axis=0)) - (wp.T @ (p * g))
        return D / tau - np.eye(p.shape[1])

    def solve(self, tau_min_rel=1e-9):
        m = self.Z.shape[1]
        sigma = np.full(m, self.total / m)
        tau = self.scale
        trail = []
        while True:
            sigma = self._newton(sigma, tau)
            _, p, _ = self.residual(sigma, tau)
            trail.append((tau, sigma.copy(), p))
            if tau <= tau_min_rel * self.scale:
                return trail
            tau /= 4.0

    def _newton(self, sigma, tau, iters=40):
        tol = 1e-11 * max(self.total, 1.0)
        for _ in range(iters):
            E, p, g = self.residual(sigma, tau)
            err = np.abs(E).sum()
            if err < tol:
                break
            J = self.jacobian(p, g, tau)
            try:
                step = np.linalg.solve(J, -E)
            except np.linalg.LinAlgError:
                step = E * tau / self.scale
            t = 1.0
            while t > 1e-4:
                cand = sigma + t * step
                if np.abs(self.residual(cand, tau)[0]).sum() < err:
                    sigma = cand
                    break
                t *= 0.5
            else:
                # stalled at float resolution or on a kink; good enough to locate the piece
                break
        return sigma


# ---------------------------------------------------------------------------
# exact stage
# ---------------------------------------------------------------------------


def _cuts(problem: Problem) -> list[list[Fraction]]:
    """Per post, every congestion where some clamped utility can change slope."""
    cuts = []
    for x in range(problem.m):
        pts = {Fraction(0), problem.total}
        for i in range(problem.n):
            pts.add(problem.floor(i))
            pts.update(z for z, _ in _pieces(problem, i)[x])
        cuts.append(sorted(p for p in pts if 0 <= p <= problem.total))
    return cuts


def _affine(problem: Problem, i: int, x: int, lo: Fraction, hi: Fraction):
    """``(a, b)`` with ``u_i(x, s ∨ floor) = a + b s`` for s in ``[lo, hi]``."""
    if lo == hi:
        return clamped_utility(problem, i, x, lo), Fraction(0)
    u_lo = clamped_utility(problem, i, x, lo)
    u_hi = clamped_utility(problem, i, x, hi)
    b = (u_hi - u_lo) / (hi - lo)
    return u_lo - b * lo, b


def _cell_lp(problem: Problem, cells, supports, refs, constrained: int | None = None):
    """Exact LP in sigma for fixed linear pieces and per-agent supports.

    The first ``constrained`` agents (default: all) must be indifferent over
    their support and weakly prefer it to every other post.  Realisability
    is imposed through the supply-demand conditions: for every proper set T
    of posts, sigma(T) is at most the weight of agents whose support meets T.
    Returns sigma or ``None``.
    """
    n, m = problem.n, problem.m
    constrained = n if constrained is None else constrained
    A, b, A_eq, b_eq = [], [], [], []
    for i in range(constrained):
        r = refs[i]
        ar, br = _affine(problem, i, r, *cells[r])
        for x in range(m):
            if x == r:
                continue
            ax, bx = _affine(problem, i, x, *cells[x])
            q = [Fraction(0)] * m
            q[x] += bx
            q[r] -= br
            if x in supports[i]:
                A_eq.append(q)
                b_eq.append(ar - ax)
            else:
                A.append(q)
                b.append(ar - ax)
    weights = [problem.weight(i) for i in range(n)]
    for k in range(1, m):
        for T in combinations(range(m), k):
            Ts = set(T)
            A.append([Fraction(int(x in Ts)) for x in range(m)])
            b.append(sum((w for w, s in zip(weights, supports) if s & Ts), Fraction(0)))
    for x in range(m):
        lo, hi = cells[x]
        q = [Fraction(int(y == x)) for y in range(m)]
        A.append(q)
        b.append(hi)
        if lo > 0:
            A.append([-v for v in q])
            b.append(-lo)
    A_eq.append([Fraction(1)] * m)
    b_eq.append(problem.total)
    x = feasible_point(A, b, A_eq, b_eq, m, exact_fallback=False)
    return None if x is None else tuple(x)


def _cell_options(cuts, sigma_hat, tol):
    """Candidate linear pieces for one post, nearest first."""
    opts = []
    for k, c in enumerate(cuts):
        if abs(float(c) - sigma_hat) <= tol:
            opts.append((c, c))
            if k > 0:
                opts.append((cuts[k - 1], c))
            if k + 1 < len(cuts):
                opts.append((c, cuts[k + 1]))
    if not opts:
        for lo, hi in zip(cuts, cuts[1:]):
            if float(lo) <= sigma_hat <= float(hi):
                opts.append((lo, hi))
                break
    out = []
    for o in opts:
        if o not in out:
            out.append(o)
    return out


def _support_options(p_row, thresholds):
    order = list(np.argsort(-p_row, kind="stable"))
    out = []
    for th in thresholds:
        s = frozenset(int(x) for x in np.nonzero(p_row >= th)[0])
        if not s:
            s = frozenset([int(order[0])])
        if s not in out:
            out.append(s)
    return out, int(order[0])


def _try_candidates(problem: Problem, cuts, sigma_hat, p, scale, budget):
    n, m = problem.n, problem.m
    for tol_rel in (1e-9, 1e-7, 1e-5, 1e-3):
        tol = tol_rel * max(float(problem.total), 1.0)
        cell_opts = [_cell_options(cuts[x], sigma_hat[x], tol) for x in range(m)]
        sup_opts, refs = [], []
        for i in range(n):
            opts, r = _support_options(p[i], (1e-6, 1e-3, 1e-9, 1e-2))
            sup_opts.append(opts)
            refs.append(r)
        for cells in product(*cell_opts):
            if sum(lo for lo, _ in cells) > problem.total or sum(hi for _, hi in cells) < problem.total:
                continue
            for level in range(max(len(o) for o in sup_opts)):
                supports = [o[min(level, len(o) - 1)] for o in sup_opts]
                refs_i = [r if r in s else min(s) for r, s in zip(refs, supports)]
                budget[0] -= 1
                if budget[0] < 0:
                    return None
                hit = _cell_lp(problem, cells, supports, refs_i)
                if hit is None:
                    continue
                sol = verify(problem, hit)
                if sol is not None:
                    return sol
    return None


def _exhaustive(problem: Problem, cuts, budget):
    """Branch over linear pieces per post and supports per agent type, pruning by LP.

    Agents sharing a preference and a weight share a demand set, so they
    are branched on together.
    """
    n, m = problem.n, problem.m
    everything = frozenset(range(m))
    subsets = [frozenset(c) for k in range(1, m + 1) for c in combinations(range(m), k)]
    segs = [[(c, c) for c in cs] + list(zip(cs, cs[1:])) for cs in cuts]
    types: dict = {}
    for i in range(n):
        types.setdefault((problem.preferences[i], problem.weight(i)), []).append(i)
    groups = list(types.values())
    order = [i for g in groups for i in g]
    perm = Problem(
        problem.posts,
        tuple(problem.agents[i] for i in order),
        tuple(problem.preferences[i] for i in order),
        weights=tuple(problem.weight(i) for i in order) if problem.weighted else None,
    )
    ends = [0]
    for g in groups:
        ends.append(ends[-1] + len(g))
    for cells in product(*segs):
        if sum(lo for lo, _ in cells) > problem.total or sum(hi for _, hi in cells) < problem.total:
            continue
        supports = [everything] * n

        def rec(t):
            budget[0] -= 1
            if budget[0] < 0:
                return None
            refs = [min(s) for s in supports]
            hit = _cell_lp(perm, cells, supports, refs, constrained=ends[t])
            if hit is None:
                return None
            if t == len(groups):
                return verify(problem, hit)
            for s in subsets:
                supports[ends[t]:ends[t + 1]] = [s] * (ends[t + 1] - ends[t])
                out = rec(t + 1)
                if out is not None:
                    return out
            supports[ends[t]:ends[t + 1]] = [everything] * (ends[t + 1] - ends[t])
            return None

        out = rec(0)
        if out is not None or budget[0] < 0:
            return out
    return None


def solve(problem: Problem, budget: int = 400, exhaustive_budget: int = 20_000) -> CompetitiveSolution:
    """Competitive fractional congestion of any cardinal problem."""
    if not problem.cardinal:
        raise ModelError("fractional congestion needs cardinal utilities")
    num = _Numeric(problem)
    trail = num.solve()
    cuts = _cuts(problem)
    left = [budget]
    tried = []
    for tau, sigma_hat, p in reversed(trail[-6:]):
        tried.append((tau, sigma_hat.tolist()))
        sol = _try_candidates(problem, cuts, sigma_hat, p, num.scale, left)
        if sol is not None:
            return sol
        if left[0] < 0:
            break
    log.warning("candidate snap failed; falling back to exhaustive search")
    sol = _exhaustive(problem, cuts, [exhaustive_budget])
    if sol is not None:
        return sol
    raise SolverError(
        "no competitive congestion found",
        {"numeric_trail": tried, "cuts": [[fmt(c) for c in cs] for cs in cuts]},
    )
