"""Split a fractional assignment matrix into a lottery over deterministic ones.

The target polytope holds 0/1-bounded matrices with unit row sums, support
inside the input's support and, optionally, each column sum between two
bounds.  We repeatedly walk a path or cycle of fractional entries and push
mass along it until some entry or column bound becomes tight.  This lands
on a deterministic vertex Y of the smallest face containing X.  Then we peel
off as much of Y as possible: ``X = lam * Y + (1 - lam) * X'``.
"""
from __future__ import annotations

import random
from fractions import Fraction
from typing import Sequence

from .model import Assignment, Lottery, ModelError

Matrix = list[list[Fraction]]


def _fractional(v: Fraction) -> bool:
    return 0 < v < 1


def _walk(Y: Matrix, colsum, bounds, rng):
    """Find a path between two loose columns, or a cycle, through fractional entries.

    Returns a list of (agent, post) edges in walk order.  Alternate edges
    will receive +eps and -eps.
    """
    n, m = len(Y), len(Y[0])
    adj_post = [[i for i in range(n) if _fractional(Y[i][x])] for x in range(m)]
    adj_agent = [[x for x in range(m) if _fractional(Y[i][x])] for i in range(n)]
    if rng is not None:
        for lst in adj_post + adj_agent:
            rng.shuffle(lst)

    def loose(x):
        lo, hi = bounds[x]
        return lo < colsum[x] < hi if lo is not None else True

    starts = [x for x in range(m) if adj_post[x] and loose(x) and (bounds[x][0] is None or colsum[x].denominator != 1)]
    if not starts:
        starts = [x for x in range(m) if adj_post[x]]
    if not starts:
        return None
    start = starts[0]
    # nodes: ("p", x) or ("a", i); path alternates post -> agent -> post
    nodes = [("p", start)]
    edges = []
    seen = {("p", start): 0}
    while True:
        kind, v = nodes[-1]
        prev_edge = edges[-1] if edges else None
        if kind == "p":
            nxt = [i for i in adj_post[v] if prev_edge is None or prev_edge != (i, v)]
            i = nxt[0]
            edge, node = (i, v), ("a", i)
        else:
            nxt = [x for x in adj_agent[v] if prev_edge is None or prev_edge != (v, x)]
            x = nxt[0]
            edge, node = (v, x), ("p", x)
        edges.append(edge)
        if node in seen:
            return edges[seen[node]:], True
        seen[node] = len(nodes)
        nodes.append(node)
        if node[0] == "p" and len(edges) >= 2 and bounds[node[1]][0] is None:
            return edges, False
        if node[0] == "p" and len(edges) >= 2 and colsum[node[1]].denominator != 1:
            return edges, False


def _shift(Y: Matrix, colsum, bounds, path, is_cycle, sign):
    plus = path[0::2] if sign > 0 else path[1::2]
    minus = path[1::2] if sign > 0 else path[0::2]
    eps = min([1 - Y[i][x] for i, x in plus] + [Y[i][x] for i, x in minus])
    if not is_cycle:
        first_post, last_post = path[0][1], path[-1][1]
        d_first = sign  # first edge is + when sign > 0
        d_last = -sign  # paths have even length, so the last edge is opposite
        for x, d in ((first_post, d_first), (last_post, d_last)):
            lo, hi = bounds[x]
            if lo is None:
                continue
            eps = min(eps, (hi - colsum[x]) if d > 0 else (colsum[x] - lo))
    return plus, minus, eps


def _vertex(X: Matrix, bounds, rng) -> Matrix:
    """A deterministic matrix in the smallest face of the polytope containing X."""
    Y = [list(r) for r in X]
    m = len(Y[0])
    while True:
        colsum = [sum(Y[i][x] for i in range(len(Y))) for x in range(m)]
        found = _walk(Y, colsum, bounds, rng)
        if found is None:
            return Y
        path, is_cycle = found
        sign = 1 if rng is None else rng.choice((1, -1))
        plus, minus, eps = _shift(Y, colsum, bounds, path, is_cycle, sign)
        if eps <= 0:
            sign = -sign
            plus, minus, eps = _shift(Y, colsum, bounds, path, is_cycle, sign)
        if eps <= 0:
            raise ModelError("decomposition stalled; the matrix is outside its own polytope")
        for i, x in plus:
            Y[i][x] += eps
        for i, x in minus:
            Y[i][x] -= eps


def decompose_matrix(X: Sequence[Sequence[Fraction]], bounds=None, seed: int | None = None) -> list[tuple[Assignment, Fraction]]:
    """Write X as a convex combination of 0/1 assignment matrices.

    ``bounds[x] = (lo, hi)`` constrains every deterministic column sum;
    ``None`` drops column constraints entirely.  Repeated assignments are
    merged.  A ``seed`` randomises the walk order, which can surface other
    valid lotteries.
    """
    X = [[Fraction(v) for v in r] for r in X]
    n, m = len(X), len(X[0])
    if bounds is None:
        bounds = [(None, None)] * m
    rng = None if seed is None else random.Random(seed)
    mass = Fraction(1)
    out: dict[tuple[int, ...], Fraction] = {}
    order: list[tuple[int, ...]] = []
    while True:
        Y = _vertex(X, bounds, rng)
        placement = tuple(next(x for x in range(m) if Y[i][x] == 1) for i in range(n))
        lam = Fraction(1)
        for i in range(n):
            for x in range(m):
                if Y[i][x] == 1:
                    lam = min(lam, X[i][x])
                elif X[i][x] > 0:
                    lam = min(lam, 1 - X[i][x])
        for x in range(m):
            lo, hi = bounds[x]
            if lo is None or lo == hi:
                continue
            c = sum(X[i][x] for i in range(n))
            y = sum(Y[i][x] for i in range(n))
            lam = min(lam, (c - lo) / (hi - lo) if y == hi else (hi - c) / (hi - lo))
        if placement not in out:
            order.append(placement)
            out[placement] = Fraction(0)
        out[placement] += mass * lam
        if lam == 1:
            break
        X = [[(X[i][x] - lam * Y[i][x]) / (1 - lam) for x in range(m)] for i in range(n)]
        mass *= 1 - lam
    return [(Assignment(p), out[p]) for p in order]


def to_lottery(entries) -> Lottery:
    return Lottery(tuple(entries)).merged()
