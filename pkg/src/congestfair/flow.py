"""Exact max-flow and bipartite transportation over rationals.

Graphs here are tiny (agents + posts + 2 nodes), so a plain Edmonds-Karp on
dense capacity dicts is plenty and keeps every quantity a Fraction.
"""
from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Iterator, Sequence


def max_flow(n_nodes: int, edges, source: int, sink: int):
    """Edmonds-Karp.  ``edges`` is an iterable of ``(u, v, capacity)``.

    Returns ``(value, flow)`` where ``flow[(u, v)]`` is the net flow on each
    input edge.
    """
    cap = [dict() for _ in range(n_nodes)]
    for u, v, c in edges:
        cap[u][v] = cap[u].get(v, 0) + c
        cap[v].setdefault(u, 0)
    original = [dict(row) for row in cap]
    value = 0
    while True:
        parent = {source: None}
        queue = deque([source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v, c in cap[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            break
        path_cap = None
        v = sink
        while parent[v] is not None:
            u = parent[v]
            path_cap = cap[u][v] if path_cap is None else min(path_cap, cap[u][v])
            v = u
        v = sink
        while parent[v] is not None:
            u = parent[v]
            cap[u][v] -= path_cap
            cap[v][u] += path_cap
            v = u
        value += path_cap
    flow = {}
    for u in range(n_nodes):
        for v, c0 in original[u].items():
            if c0 > 0:
                flow[(u, v)] = c0 - cap[u][v] if cap[u][v] < c0 else 0
    return value, flow


def transport(supply: Sequence, capacity: Sequence, allowed: Sequence) -> list[list] | None:
    """Ship every row's supply to allowed columns, filling each column exactly.

    ``supply[i]`` is row i's mass, ``capacity[x]`` column x's required load
    and ``allowed[i]`` the columns row i may use.  Totals must agree.  Returns
    the shipment matrix or ``None`` when no exact transport exists.
    """
    n, m = len(supply), len(capacity)
    if sum(supply) != sum(capacity):
        return None
    s, t = n + m, n + m + 1
    edges = [(s, i, supply[i]) for i in range(n)]
    edges += [(i, n + x, supply[i]) for i in range(n) for x in sorted(allowed[i])]
    edges += [(n + x, t, capacity[x]) for x in range(m)]
    value, flow = max_flow(n + m + 2, edges, s, t)
    if value != sum(supply):
        return None
    zero = Fraction(0) if any(isinstance(v, Fraction) for v in supply) else 0
    out = [[zero] * m for _ in range(n)]
    for i in range(n):
        for x in allowed[i]:
            out[i][x] = flow.get((i, n + x), zero)
    return out


def b_matching(counts: Sequence[int], allowed: Sequence) -> tuple[int, ...] | None:
    """Place each agent at one allowed post so post x receives exactly ``counts[x]``."""
    plan = transport([1] * len(allowed), list(counts), allowed)
    if plan is None:
        return None
    return tuple(next(x for x, v in enumerate(row) if v == 1) for row in plan)


def b_matchings(counts: Sequence[int], allowed: Sequence, limit: int | None = None) -> Iterator[tuple[int, ...]]:
    """Yield every placement realising ``counts`` within ``allowed``, in lexicographic order."""
    n = len(allowed)
    counts = list(counts)
    placement = [0] * n
    emitted = 0

    def feasible(start):
        return transport([1] * (n - start), counts, allowed[start:]) is not None

    def rec(i):
        nonlocal emitted
        if i == n:
            emitted += 1
            yield tuple(placement)
            return
        for x in sorted(allowed[i]):
            if counts[x] == 0:
                continue
            counts[x] -= 1
            placement[i] = x
            if feasible(i + 1):
                yield from rec(i + 1)
                if limit is not None and emitted >= limit:
                    counts[x] += 1
                    return
            counts[x] += 1

    if sum(counts) == n and feasible(0):
        yield from rec(0)
