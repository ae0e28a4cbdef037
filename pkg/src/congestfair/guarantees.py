"""Prefix guarantees and top-fair assignments.

A prefix is a vector of per-post caps: agent i accepts post a as long as the
congestion there does not exceed ``caps[a]`` (a zero cap means never).  An
assignment is top-fair when every agent sits within their cap.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Sequence

from .flow import b_matchings
from .model import (
    Assignment,
    ModelError,
    PiecewiseUtility,
    Problem,
    RankedPreference,
    TableUtility,
    as_fraction,
    fmt,
)

Caps = tuple  # tuple[Fraction, ...] indexed by post


class LimitExceeded(RuntimeError):
    """An enumeration hit its limit; ``count`` is how many items were seen so far."""

    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


@dataclass(frozen=True)
class PrefixFamily:
    """All n-prefixes of one anonymous preference (or the first ``limit`` of them).

    ``count`` is the true number of prefixes.  When ``truncated`` is set only
    the canonical prefix (ties broken in post order) is listed.
    """

    prefixes: tuple[Caps, ...]
    count: int
    truncated: bool
    max_caps: Caps

    def __iter__(self):
        return iter(self.prefixes)

    def __len__(self):
        return len(self.prefixes)

    def __getitem__(self, k):
        return self.prefixes[k]

    @property
    def canonical(self) -> Caps:
        return self.prefixes[0]


def anonymous_prefixes(pref: RankedPreference | TableUtility, n: int | None = None, limit: int = 64) -> PrefixFamily:
    """Every way to pick the agent's n best allocations as per-post caps."""
    rows = pref.levels if isinstance(pref, RankedPreference) else pref.values
    m = len(rows)
    if n is None:
        n = len(rows[0])
    allocs = [(pref.key(a, s), a) for a in range(m) for s in range(1, n + 1)]
    allocs.sort(key=lambda kv: kv[0], reverse=True)
    pivot = allocs[n - 1][0]
    above = [0] * m
    tied = []
    for k, a in allocs:
        if k > pivot:
            above[a] += 1
        elif k == pivot:
            tied.append(a)
    tied.sort()
    r = n - sum(above)
    total = comb(len(tied), r)
    choices = [tied[:r]] if total > limit else list(combinations(tied, r))
    prefixes = []
    for chosen in choices:
        caps = list(above)
        for a in chosen:
            caps[a] += 1
        prefixes.append(tuple(Fraction(c) for c in caps))
    # coordinate-wise maximum over all prefixes, listed or not
    top = tuple(Fraction(above[a] + (1 if a in tied and r > 0 else 0)) for a in range(m))
    return PrefixFamily(tuple(prefixes), total, total > limit, top)


def _level_sup(pref: PiecewiseUtility, post: int, t: Fraction) -> Fraction | None:
    """Largest congestion at which utility at ``post`` is still at least ``t``."""
    row = pref.pieces[post]
    if t > row[0][1]:
        return None
    if t <= row[-1][1]:
        return row[-1][0]
    for (z0, u0), (z1, u1) in zip(row, row[1:]):
        if u1 <= t <= u0:
            return z0 + (z1 - z0) * (u0 - t) / (u0 - u1)
    raise AssertionError("unreachable")


def weighted_prefix(pref: PiecewiseUtility) -> Caps:
    """The unique (W - w)-prefix of a piecewise-linear utility on ``[w, W]``.

    Finds the utility threshold t* whose upper contour set
    ``{(x, z): u(x, z) >= t*}`` has total length ``W - w`` and returns, per
    post, the largest congestion in that set (0 if the post is excluded).
    """
    w, W = pref.floor, pref.ceiling
    m = len(pref.pieces)
    if W == w:
        best = max(row[0][1] for row in pref.pieces)
        return tuple(W if row[0][1] == best else Fraction(0) for row in pref.pieces)
    target = W - w

    def length(t):
        total = Fraction(0)
        for x in range(m):
            z = _level_sup(pref, x, t)
            if z is not None:
                total += z - w
        return total

    levels = sorted({u for row in pref.pieces for _, u in row}, reverse=True)
    prev_t, prev_len = None, None
    t_star = None
    for t in levels:
        cur = length(t)
        if cur >= target:
            if cur == target or prev_t is None:
                t_star = t
            else:
                # length is affine between consecutive utility levels
                t_star = prev_t + (t - prev_t) * (target - prev_len) / (cur - prev_len)
            break
        prev_t, prev_len = t, cur
    assert t_star is not None
    caps = []
    for x in range(m):
        z = _level_sup(pref, x, t_star)
        caps.append(Fraction(0) if z is None else z)
    return tuple(caps)


def check_prefix(caps: Sequence, weight, total, anonymous: bool) -> None:
    """Raise unless ``caps`` obeys the prefix size identity."""
    caps = [as_fraction(c) for c in caps]
    w, W = as_fraction(weight), as_fraction(total)
    if anonymous:
        if any(c.denominator != 1 or c < 0 for c in caps):
            raise ModelError("anonymous caps must be non-negative integers")
        if sum(caps) != W:
            raise ModelError(f"anonymous caps sum to {fmt(sum(caps))}, expected {fmt(W)}")
        return
    if any(c != 0 and not w <= c <= W for c in caps):
        raise ModelError("weighted caps must be 0 or lie in [w, W]")
    k = sum(1 for c in caps if c > 0)
    if sum(caps) != W + (k - 1) * w:
        raise ModelError(
            f"weighted caps sum to {fmt(sum(caps))}, expected {fmt(W + (k - 1) * w)}"
        )


def prefix_profile(problem: Problem) -> tuple[Caps, ...]:
    """One prefix per agent: overrides first, else the canonical derived prefix."""
    out = []
    for i, pref in enumerate(problem.preferences):
        if problem.prefixes is not None and problem.prefixes[i] is not None:
            out.append(problem.prefixes[i])
        elif problem.weighted:
            out.append(weighted_prefix(pref))
        else:
            out.append(anonymous_prefixes(pref, problem.n).canonical)
    return tuple(out)


def is_top_fair(problem: Problem, caps: Sequence[Caps], P: Assignment) -> bool:
    s = P.congestion(problem)
    return all(s[a] <= caps[i][a] for i, a in enumerate(P.placement))


def cmax(problem: Problem, caps: Sequence[Caps], post: int) -> int:
    """Most agents that fit at ``post`` with everyone inside their cap."""
    ranked = sorted((c[post] for c in caps), reverse=True)
    best = 0
    for k, c in enumerate(ranked, start=1):
        if c >= k:
            best = k
    return best


def unique_congestion_test(problem: Problem, caps: Sequence[Caps]) -> bool:
    return sum(cmax(problem, caps, a) for a in range(problem.m)) == problem.n


def greedy_top_fair_anonymous(problem: Problem, caps: Sequence[Caps]) -> Assignment:
    """Fill posts one at a time with the largest group that fits, best caps first."""
    placement = [None] * problem.n
    agents = list(range(problem.n))
    posts = list(range(problem.m))
    while agents:
        posts = [a for a in posts if any(caps[i][a] > 0 for i in agents)]
        if not posts:
            raise ModelError("greedy ran out of posts; the caps are not valid prefixes")
        a = posts.pop(0)
        order = sorted(agents, key=lambda i: (-caps[i][a], i))
        k_fit = 0
        for k, i in enumerate(order, start=1):
            if caps[i][a] >= k:
                k_fit = k
        for i in order[:k_fit]:
            placement[i] = a
        chosen = set(order[:k_fit])
        agents = [i for i in agents if i not in chosen]
    return Assignment(tuple(placement))


def _accepting_group(order, caps, weights, a):
    """Grow a group at post ``a`` along ``order`` until every outsider rejects it."""
    group = [order[0]]
    load = weights[order[0]]
    last = 0
    while True:
        for pos in range(last + 1, len(order)):
            j = order[pos]
            if caps[j][a] >= load + weights[j]:
                group.append(j)
                load += weights[j]
                last = pos
                break
        else:
            return group


def greedy_top_fair_weighted(problem: Problem, caps: Sequence[Caps]) -> Assignment:
    """Weighted analogue: at each post grow the group by the next agent that accepts it."""
    weights = [problem.weight(i) for i in range(problem.n)]
    placement = [None] * problem.n
    agents = list(range(problem.n))
    posts = list(range(problem.m))
    while agents:
        posts = [a for a in posts if any(caps[i][a] > 0 for i in agents)]
        if not posts:
            raise ModelError("greedy ran out of posts; the caps are not valid prefixes")
        a = posts.pop(0)
        order = sorted(agents, key=lambda i: (-caps[i][a], i))
        group = _accepting_group(order, caps, weights, a)
        for i in group:
            placement[i] = a
        agents = [i for i in agents if i not in set(group)]
    return Assignment(tuple(placement))


def greedy_top_fair(problem: Problem, caps: Sequence[Caps] | None = None) -> Assignment:
    caps = prefix_profile(problem) if caps is None else caps
    if problem.weighted:
        return greedy_top_fair_weighted(problem, caps)
    return greedy_top_fair_anonymous(problem, caps)


@dataclass(frozen=True)
class TopFairSet:
    assignments: tuple[Assignment, ...]
    congestions: frozenset


def compositions(n: int, m: int):
    """All ways to write n as an ordered sum of m non-negative integers."""
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in compositions(n - first, m - 1):
            yield (first,) + rest


def enumerate_top_fair(problem: Problem, caps: Sequence[Caps] | None = None, limit: int = 100_000) -> TopFairSet:
    """Every top-fair assignment, sorted by placement.

    Anonymous problems loop over congestion profiles, then list the
    matchings of agents to posts whose cap covers the load.  Weighted ones
    run a depth-first search over agents with load and cap pruning.
    """
    caps = prefix_profile(problem) if caps is None else caps
    n, m = problem.n, problem.m
    found = []
    if not problem.weighted:
        for s in compositions(n, m):
            allowed = [{x for x in range(m) if s[x] and caps[i][x] >= s[x]} for i in range(n)]
            if any(not a for a in allowed):
                continue
            for placement in b_matchings(s, allowed, limit=limit + 1 - len(found)):
                found.append(Assignment(placement))
            if len(found) > limit:
                raise LimitExceeded(f"more than {limit} top-fair assignments", len(found))
        found.sort()
        return TopFairSet(tuple(found), frozenset(a.congestion(problem) for a in found))

    weights = [problem.weight(i) for i in range(n)]
    load = [Fraction(0)] * m
    room = [None] * m  # smallest cap among current occupants
    placement = [0] * n

    def fits(i, x):
        c = caps[i][x]
        if c <= 0:
            return False
        new = load[x] + weights[i]
        return new <= c and (room[x] is None or new <= room[x])

    def rec(i):
        if i == n:
            found.append(Assignment(tuple(placement)))
            if len(found) > limit:
                raise LimitExceeded(f"more than {limit} top-fair assignments", len(found))
            return
        for j in range(i + 1, n):
            if not any(fits(j, x) for x in range(m)):
                return
        for x in range(m):
            if not fits(i, x):
                continue
            saved = room[x]
            load[x] += weights[i]
            room[x] = caps[i][x] if saved is None else min(saved, caps[i][x])
            placement[i] = x
            rec(i + 1)
            load[x] -= weights[i]
            room[x] = saved

    rec(0)
    return TopFairSet(tuple(found), frozenset(a.congestion(problem) for a in found))


def maximality_witness(posts: Sequence[str], total, star_weight, star_caps: Sequence, post, eps) -> Problem:
    """Adversarial weighted instance pinning agent ``i*`` near its cap at ``post``.

    Adds one single-minded agent per post that ``i*`` accepts.  Their weights
    are chosen so that every top-fair assignment puts ``i*`` at ``post``
    sharing it with that post's single-minded agent, at congestion
    ``caps[post] - (k - 1) * eps`` where k counts the accepted posts.
    """
    posts = tuple(posts)
    W, w = as_fraction(total), as_fraction(star_weight)
    caps = tuple(as_fraction(c) for c in star_caps)
    eps = as_fraction(eps)
    a = posts.index(post) if isinstance(post, str) else post
    check_prefix(caps, w, W, anonymous=False)
    if not caps[a] > w:
        raise ModelError("the chosen post's cap must exceed the agent's weight")
    if eps <= 0:
        raise ModelError("eps must be positive")
    accepted = [b for b in range(len(posts)) if caps[b] > 0]
    k = len(accepted)
    weights = {}
    for b in accepted:
        weights[b] = caps[b] - w + eps if b != a else caps[a] - w - (k - 1) * eps
    if weights[a] <= 0:
        raise ModelError("eps too large: the partner weight at the chosen post is not positive")
    labels = ("i*",) + tuple(f"i_{posts[b]}" for b in accepted)
    ws = (w,) + tuple(weights[b] for b in accepted)
    prefs = [PiecewiseUtility.slack(caps, w, W)]
    for b in accepted:
        own = [W if x == b else Fraction(0) for x in range(len(posts))]
        prefs.append(PiecewiseUtility.slack(own, weights[b], W))
    return Problem(posts, labels, tuple(prefs), weights=ws)
