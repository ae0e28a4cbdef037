import random
from fractions import Fraction as F

import pytest

from congestfair import (
    Lottery,
    ModelError,
    PiecewiseUtility,
    Problem,
    StochasticMatrix,
    birkhoff_decompose,
    fairness_violation_report,
    greedy_top_fair,
    load_fixture,
    load_lottery,
    prefix_profile,
    solve_competitive,
    solve_weighted_competitive,
)

from oracles import (
    f_crowded_sigma,
    is_competitive_sigma,
    random_table_problem,
    random_weighted_problem,
    weighted_candidates_m2,
)


def rebuild(lottery, shape):
    n, m = shape
    M = [[F(0)] * m for _ in range(n)]
    for P, p in lottery:
        for i, x in enumerate(P.placement):
            M[i][x] += p
    return tuple(tuple(r) for r in M)


def test_heavy_pair_solution():
    p = load_fixture("heavy_pair")
    sol = solve_weighted_competitive(p)
    assert sol.sigma == (11, 10)
    assert sol.demands[p.agent_index("alpha")] == sol.demands[p.agent_index("beta")] == {0, 1}
    assert not sol.f_crowded
    ws = [p.weight(i) for i in range(p.n)]
    assert sol.pi.column_sums(ws) == sol.sigma


def test_single_agent_goes_to_a_best_post():
    w = F(3, 2)
    u = PiecewiseUtility((((w, F(2)),), ((w, F(7, 2)),)))
    p = Problem(("a", "b"), ("x",), (u,), weights=(w,))
    sol = solve_weighted_competitive(p)
    assert sol.sigma == (0, F(3, 2))


def test_weighted_solver_rejects_anonymous():
    with pytest.raises(ModelError):
        solve_weighted_competitive(load_fixture("mirror"))


def test_unit_weights_match_anonymous():
    q = load_fixture("mirror")
    assert solve_weighted_competitive(q.with_weights([1] * q.n)).sigma == solve_competitive(q).sigma
    rng = random.Random(81)
    for _ in range(30):
        q = random_table_problem(rng, rng.randint(1, 6), rng.randint(1, 3))
        a = solve_competitive(q)
        w = solve_weighted_competitive(q.with_weights([1] * q.n))
        assert w.demands == a.demands
        assert all(x == y or (x <= 1 and y <= 1) for x, y in zip(w.sigma, a.sigma))


# -- decomposition ---------------------------------------------------------------------


def test_birkhoff_heavy_pair():
    p = load_fixture("heavy_pair")
    sol = solve_weighted_competitive(p)
    L = birkhoff_decompose(sol)
    assert L.expected_congestion(p) == sol.sigma
    assert rebuild(L, (p.n, p.m)) == sol.pi.rows
    for P, _ in L:
        assert all(x in sol.demands[i] for i, x in enumerate(P.placement))


def test_birkhoff_l2_matrix():
    p = load_fixture("heavy_pair")
    rows = ((F(11, 20), F(9, 20)), (F(11, 20), F(9, 20)), (F(0), F(1)))
    assert StochasticMatrix(rows).column_sums([10, 10, 1]) == (11, 10)
    L = birkhoff_decompose(rows)
    assert rebuild(L, (3, 2)) == rows
    assert L.expected_congestion(p) == (11, 10)


def test_birkhoff_deterministic_matrix():
    rows = ((F(0), F(1)), (F(1), F(0)), (F(1), F(0)))
    L = birkhoff_decompose(StochasticMatrix(rows))
    assert len(L) == 1 and L.entries[0][1] == 1
    assert L.entries[0][0].placement == (1, 0, 0)


def test_birkhoff_random_matrices():
    rng = random.Random(82)
    for _ in range(40):
        n, m = rng.randint(1, 4), rng.randint(1, 3)
        rows = []
        for _ in range(n):
            raw = [rng.randint(0, 5) for _ in range(m)]
            if not any(raw):
                raw[0] = 1
            rows.append(tuple(F(v, sum(raw)) for v in raw))
        rows = tuple(rows)
        L = birkhoff_decompose(rows, seed=rng.randint(0, 9))
        assert rebuild(L, (n, m)) == rows
        for P, _ in L:
            assert all(rows[i][x] > 0 for i, x in enumerate(P.placement))


# -- violation report -----------------------------------------------------------------


def test_violation_report_heavy_pair():
    p = load_fixture("heavy_pair")
    L1 = load_lottery(p, "heavy_pair_even")
    L2 = load_lottery(p, "heavy_pair_skewed")
    r1 = fairness_violation_report(p, L1)
    r2 = fairness_violation_report(p, L2)
    assert r1.violation_probability == F(1, 2)
    assert r1.fair == (True, True, False, False)
    assert r2.violation_probability == F(1, 10)
    # L2 breaks fairness rarely but more severely
    assert r2.worst_margin > r1.worst_margin > 0
    assert L2.expected_congestion(p) == (11, 10)
    # L1 averages to (21/2, 21/2); see the decisions ledger
    assert L1.expected_congestion(p) == (F(21, 2), F(21, 2))


def test_no_violation_on_top_fair_lottery():
    p = load_fixture("weighted_trio")
    P = greedy_top_fair(p)
    r = fairness_violation_report(p, Lottery(((P, F(1)),)), prefix_profile(p))
    assert r.violation_probability == 0 and r.fair == (True,)


# -- random weighted instances ------------------------------------------------------------


def test_random_weighted_feasibility_exact():
    rng = random.Random(83)
    for _ in range(40):
        p = random_weighted_problem(rng, rng.randint(1, 6), rng.randint(1, 3))
        sol = solve_weighted_competitive(p)
        ws = [p.weight(i) for i in range(p.n)]
        assert sol.pi.column_sums(ws) == sol.sigma and sum(sol.sigma) == p.total
        assert is_competitive_sigma(p, sol.sigma) is not None
        L = birkhoff_decompose(sol)
        assert L.expected_congestion(p) == sol.sigma


def test_f_crowded_uniqueness_oracle():
    rng = random.Random(84)
    crowded = 0
    for _ in range(60):
        p = random_weighted_problem(rng, rng.randint(1, 4), 2)
        sol = solve_weighted_competitive(p)
        others = []
        for sigma in weighted_candidates_m2(p):
            d = is_competitive_sigma(p, sigma)
            if d is not None and f_crowded_sigma(p, sigma, d):
                others.append(sigma)
        if sol.f_crowded:
            crowded += 1
            assert others == [sol.sigma]
        else:
            assert len(others) <= 1
    assert crowded > 10
