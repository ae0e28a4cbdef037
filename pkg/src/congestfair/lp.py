"""Exact feasibility for small LPs.

A float solve (HiGHS) proposes a vertex; we rebuild it exactly from the
constraints that are tight there and check every constraint in rationals.
When that snap fails, a dense Fraction simplex (Bland's rule) decides.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

Row = Sequence[Fraction]


def _rank_solve(rows: list[list[Fraction]], rhs: list[Fraction], nv: int):
    """Pick rows greedily (in order) until rank nv, then solve exactly; None if rank-deficient."""
    echelon = []  # (pivot col, row, rhs) in reduced form
    for r, v in zip(rows, rhs):
        r, v = list(r), v
        for col, er, ev in echelon:
            f = r[col]
            if f:
                r = [a - f * b for a, b in zip(r, er)]
                v = v - f * ev
        piv = next((k for k, a in enumerate(r) if a), None)
        if piv is None:
            continue
        p = r[piv]
        r = [a / p for a in r]
        v = v / p
        for idx, (col, er, ev) in enumerate(echelon):
            f = er[piv]
            if f:
                echelon[idx] = (col, [a - f * b for a, b in zip(er, r)], ev - f * v)
        echelon.append((piv, r, v))
        if len(echelon) == nv:
            x = [Fraction(0)] * nv
            for col, er, ev in echelon:
                x[col] = ev
            return x
    return None


def _satisfies(x, A_ub, b_ub, A_eq, b_eq) -> bool:
    dot = lambda r: sum((a * v for a, v in zip(r, x) if a), Fraction(0))
    return all(dot(r) <= b for r, b in zip(A_ub, b_ub)) and all(
        dot(r) == b for r, b in zip(A_eq, b_eq)
    )


def _snap(A_ub, b_ub, A_eq, b_eq, nv):
    """Float LP, then exact reconstruction from the tight constraints."""
    c = np.zeros(nv)
    kw = dict(bounds=[(0, None)] * nv, method="highs")
    if A_ub:
        kw.update(A_ub=np.array(A_ub, dtype=float), b_ub=np.array(b_ub, dtype=float))
    if A_eq:
        kw.update(A_eq=np.array(A_eq, dtype=float), b_eq=np.array(b_eq, dtype=float))
    res = linprog(c, **kw)
    if res.status == 2:
        return "infeasible"
    if res.status != 0:
        return None
    xf = res.x
    scale = 1.0 + max((abs(float(v)) for v in list(b_ub) + list(b_eq)), default=0.0)
    ub_slack = [float(b) - float(np.dot(np.array(r, dtype=float), xf)) for r, b in zip(A_ub, b_ub)]
    nonneg = [(xf[k], k) for k in range(nv)]
    cands = [(s, "ub", k) for k, s in enumerate(ub_slack)] + [(v, "x", k) for v, k in nonneg]
    cands.sort(key=lambda t: abs(t[0]))
    rows = [list(r) for r in A_eq]
    rhs = list(b_eq)
    for s, kind, k in cands:
        if abs(s) > 1e-6 * scale:
            break
        if kind == "ub":
            rows.append(list(A_ub[k]))
            rhs.append(b_ub[k])
        else:
            e = [Fraction(0)] * nv
            e[k] = Fraction(1)
            rows.append(e)
            rhs.append(Fraction(0))
    x = _rank_solve(rows, rhs, nv)
    if x is not None and all(v >= 0 for v in x) and _satisfies(x, A_ub, b_ub, A_eq, b_eq):
        return x
    return None


def simplex_feasible(A_ub, b_ub, A_eq, b_eq, nv):
    """Phase-one simplex in exact arithmetic; a point with x >= 0 or None."""
    rows, rhs = [], []
    n_slack = len(A_ub)
    for k, (r, b) in enumerate(zip(A_ub, b_ub)):
        slack = [Fraction(0)] * n_slack
        slack[k] = Fraction(1)
        rows.append([Fraction(a) for a in r] + slack)
        rhs.append(Fraction(b))
    for r, b in zip(A_eq, b_eq):
        rows.append([Fraction(a) for a in r] + [Fraction(0)] * n_slack)
        rhs.append(Fraction(b))
    for k in range(len(rows)):
        if rhs[k] < 0:
            rows[k] = [-a for a in rows[k]]
            rhs[k] = -rhs[k]
    nr, nc = len(rows), nv + n_slack
    # tableau columns: structural + slack, then one artificial per row
    T = [rows[k] + [Fraction(int(j == k)) for j in range(nr)] + [rhs[k]] for k in range(nr)]
    basis = [nc + k for k in range(nr)]
    width = nc + nr
    # objective: minimise sum of artificials, expressed in nonbasic terms
    obj = [Fraction(0)] * (width + 1)
    for k in range(nr):
        for j in range(width + 1):
            obj[j] -= T[k][j]
    for k in range(nr):
        obj[nc + k] += 1
    while True:
        col = next((j for j in range(width) if obj[j] < 0), None)
        if col is None:
            break
        best, prow = None, None
        for k in range(nr):
            a = T[k][col]
            if a > 0:
                ratio = T[k][-1] / a
                if best is None or ratio < best or (ratio == best and basis[k] < basis[prow]):
                    best, prow = ratio, k
        if prow is None:
            return None  # unbounded phase one cannot happen; defensive
        p = T[prow][col]
        T[prow] = [a / p for a in T[prow]]
        for k in range(nr):
            f = T[k][col]
            if k != prow and f:
                T[k] = [a - f * b for a, b in zip(T[k], T[prow])]
        f = obj[col]
        obj = [a - f * b for a, b in zip(obj, T[prow])]
        basis[prow] = col
    if obj[-1] != 0:
        return None
    x = [Fraction(0)] * width
    for k, j in enumerate(basis):
        x[j] = T[k][-1]
    return x[:nv]


def feasible_point(A_ub, b_ub, A_eq, b_eq, nv: int, exact_fallback: bool = True):
    """Some x >= 0 with ``A_ub x <= b_ub`` and ``A_eq x == b_eq``, exactly; else None."""
    A_ub = [[Fraction(a) for a in r] for r in A_ub]
    A_eq = [[Fraction(a) for a in r] for r in A_eq]
    b_ub = [Fraction(b) for b in b_ub]
    b_eq = [Fraction(b) for b in b_eq]
    got = _snap(A_ub, b_ub, A_eq, b_eq, nv)
    if isinstance(got, list):
        return got
    if got == "infeasible" and not exact_fallback:
        return None
    return simplex_feasible(A_ub, b_ub, A_eq, b_eq, nv)
