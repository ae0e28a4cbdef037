import logging
import random
from fractions import Fraction as F

import pytest

from congestfair import (
    Assignment,
    Lottery,
    ModelError,
    Problem,
    SolverError,
    TableUtility,
    certify_lottery,
    decompose,
    delta,
    demand_frac,
    feasibility,
    load_fixture,
    parse_assignment,
    solve_competitive,
    verify,
)
from congestfair.equilibrium import _cuts, _exhaustive, solve

from oracles import competitive_vertices, hall_feasible, is_competitive_sigma, random_table_problem

S_MIRROR = (F(14, 3), F(8, 3), F(14, 3))
S_SPLIT = (F(17, 4), F(15, 4))


def demand_of(p, sigma, label):
    return {p.posts[x] for x in demand_frac(p, sigma, p.agent_index(label))}


# -- demand and feasibility -----------------------------------------------------------


def test_demand_split_beta_alt_table():
    p = load_fixture("split_beta_alt")
    assert demand_of(p, S_SPLIT, "beta2") == {"a", "b"}
    assert demand_of(p, S_SPLIT, "beta1") == {"a"}


def test_demand_mirror():
    p = load_fixture("mirror")
    assert demand_of(p, S_MIRROR, "alpha1") == {"a", "b"}
    assert demand_of(p, S_MIRROR, "beta1") == {"b", "c"}


def test_demand_clamps_light_posts_at_one():
    p = load_fixture("mirror")
    lo = demand_frac(p, (F(11, 2), F(1, 2), F(6)), 0)
    hi = demand_frac(p, (F(11, 2), F(1), F(11, 2)), 0)
    # alpha values b at 4 - 1 whatever the load below one
    assert lo == hi == {1}


def test_feasibility_mirror():
    p = load_fixture("mirror")
    demands = [demand_frac(p, S_MIRROR, i) for i in range(p.n)]
    pi = feasibility(p, S_MIRROR, demands)
    assert pi is not None
    assert pi.column_sums() == S_MIRROR
    assert all(sum(r) == 1 for r in pi.rows)
    assert all(v == 0 or x in demands[i] for i, r in enumerate(pi.rows) for x, v in enumerate(r))


def test_feasibility_single_agent():
    p = Problem(("a",), ("x",), (TableUtility.slack([1], 1),))
    assert feasibility(p, (1,), [frozenset({0})]).rows == ((1,),)


def test_feasibility_fails_for_the_wrong_split():
    # with beta1 sent to a with probability 1/3 both betas want b only
    p = load_fixture("split_beta")
    sigma = (F(13, 3), F(11, 3))
    demands = [demand_frac(p, sigma, i) for i in range(p.n)]
    assert demands[p.agent_index("beta1")] == demands[p.agent_index("beta2")] == {1}
    assert feasibility(p, sigma, demands) is None
    assert not hall_feasible(sigma, demands, [1] * p.n)


# -- solver ---------------------------------------------------------------------------


def test_solve_mirror():
    sol = solve_competitive(load_fixture("mirror"))
    assert sol.sigma == S_MIRROR
    assert sol.residual == (0, 0, 0)
    assert sol.ambiguous == ()


def test_solve_split_beta():
    p = load_fixture("split_beta")
    sol = solve_competitive(p)
    assert sol.sigma == S_SPLIT
    assert sol.demands[p.agent_index("beta2")] == {0, 1}
    assert sol.demands[p.agent_index("beta1")] == {1}


def test_solve_split_beta_alt_table():
    # the alternative table for beta1 moves the equilibrium; see the decisions ledger
    p = load_fixture("split_beta_alt")
    sol = solve_competitive(p)
    assert sol.sigma == (F(13, 3), F(11, 3))
    assert sol.pi.rows[p.agent_index("beta1")] == (F(1, 3), F(2, 3))


def test_symmetric_problem_is_uniform():
    for n, m in ((6, 3), (5, 2), (7, 3)):
        u = TableUtility.slack([n] * m, n)
        p = Problem(tuple("abc"[:m]), tuple(f"i{k}" for k in range(n)), (u,) * n)
        assert solve_competitive(p).sigma == (F(n, m),) * m


def test_solver_rejects_ordinal_and_weighted():
    with pytest.raises(ModelError):
        solve_competitive(load_fixture("cycle_ranked"))
    with pytest.raises(ModelError):
        solve_competitive(load_fixture("heavy_pair"))


def test_verify_rejects_non_equilibria():
    p = load_fixture("mirror")
    assert verify(p, (F(4), F(4), F(4))) is None
    assert verify(p, (F(5), F(2), F(4))) is None
    assert verify(p, S_MIRROR) is not None


def test_exhaustive_fallback_agrees():
    for name in ("split_beta", "split_beta_alt"):
        p = load_fixture(name)
        sol = _exhaustive(p, _cuts(p), [5000])
        assert sol is not None and sol.sigma == solve_competitive(p).sigma


def test_solver_error_carries_diagnostics(caplog):
    p = load_fixture("split_beta")
    with caplog.at_level(logging.WARNING), pytest.raises(SolverError) as err:
        solve(p, budget=0, exhaustive_budget=0)
    assert set(err.value.diagnostics) == {"numeric_trail", "cuts"}
    assert "exhaustive" in caplog.text


def test_monotone_clamp():
    rng = random.Random(71)
    for _ in range(60):
        n, m = rng.randint(1, 6), rng.randint(2, 3)
        p = random_table_problem(rng, n, m)
        sigma = [F(rng.randint(0, 4 * n), 4) for _ in range(m)]
        light = [x for x in range(m) if sigma[x] < 1]
        if not light:
            continue
        moved = list(sigma)
        for x in light:
            moved[x] = F(rng.randint(0, 4), 4)
        for i in range(n):
            assert demand_frac(p, sigma, i) == demand_frac(p, moved, i)


def test_random_solutions_against_oracle():
    rng = random.Random(72)
    for _ in range(40):
        n, m = rng.randint(1, 5), rng.randint(1, 3)
        p = random_table_problem(rng, n, m)
        sol = solve_competitive(p)
        assert is_competitive_sigma(p, sol.sigma) is not None
        for v in competitive_vertices(p):
            assert all(a == b or (a <= 1 and b <= 1) for a, b in zip(v, sol.sigma))


# -- decomposition ----------------------------------------------------------------------


def test_decompose_split_beta():
    p = load_fixture("split_beta")
    impl = decompose(solve_competitive(p))
    P1 = parse_assignment(p, "a:alpha1,alpha2,alpha3,alpha4 b:beta1,beta2,gamma1,gamma2")
    P2 = parse_assignment(p, "a:alpha1,alpha2,alpha3,alpha4,beta2 b:beta1,gamma1,gamma2")
    assert impl.lottery.entries == ((P1, F(3, 4)), (P2, F(1, 4)))
    assert impl.rounding_ok


def test_decompose_mirror():
    p = load_fixture("mirror")
    impl = decompose(solve_competitive(p))
    assert sorted(impl.congestions) == [(4, 3, 5), (5, 2, 5), (5, 3, 4)]
    assert [q for _, q in impl.lottery] == [F(1, 3)] * 3
    assert impl.rounding_ok
    assert impl.lottery.expected_congestion(p) == S_MIRROR


def test_decompose_is_seed_independent_in_expectation():
    p = load_fixture("mirror")
    sol = solve_competitive(p)
    for seed in range(5):
        impl = decompose(sol, seed=seed)
        assert impl.rounding_ok and impl.lottery.expected_congestion(p) == S_MIRROR


def test_mirror_expected_alpha_utility():
    p = load_fixture("mirror")
    impl = decompose(solve_competitive(p))
    alphas = [i for i, a in enumerate(p.agents) if a.startswith("alpha")]
    mean = sum(q * sum(P.utilities(p)[i] for i in alphas) for P, q in impl.lottery) / len(alphas)
    assert mean == F(23, 18)
    # everybody gets 4/3 at the symmetric deterministic profile (4, 4, 4)
    P3 = parse_assignment(p, "a:alpha1,alpha2,alpha3,alpha4 b:alpha5,alpha6,beta1,beta2 "
                             "c:beta3,beta4,beta5,beta6")
    assert P3.congestion(p) == (4, 4, 4)
    assert sum(P3.utilities(p)) / p.n == F(4, 3) > mean


def test_integer_sigma_gives_one_competitive_entry():
    from congestfair import is_competitive

    p = load_fixture("cycle_slack")
    # slack utilities as a cardinal problem: sigma is (2, 2, 2)
    sol = solve_competitive(p)
    impl = decompose(sol)
    assert sol.sigma == (2, 2, 2)
    assert len(impl) == 1 and impl.lottery.entries[0][1] == 1
    assert is_competitive(p, impl.lottery.entries[0][0])
    assert certify_lottery(p, impl).ok


def test_random_decompositions():
    rng = random.Random(73)
    for _ in range(40):
        p = random_table_problem(rng, rng.randint(1, 7), rng.randint(1, 4))
        sol = solve_competitive(p)
        impl = decompose(sol, seed=rng.randint(0, 99))
        assert impl.rounding_ok
        assert impl.lottery.expected_congestion(p) == sol.sigma


# -- delta and the approximation certificate -------------------------------------------


def test_delta():
    assert delta(TableUtility.slack([3, 2], 4)) == 1
    assert delta(TableUtility([[F(10 - 2 * s) for s in range(1, 5)]] * 2)) == 2
    p = load_fixture("split_beta")
    assert delta(p.preferences[p.agent_index("beta2")]) == 2
    assert delta(TableUtility(((F(3),),))) == 0


def test_certify_split_beta():
    p = load_fixture("split_beta")
    rep = certify_lottery(p, decompose(solve_competitive(p)))
    assert rep.ok and rep.failures == ()
    assert all(v is True for v in rep.clauses.values())
    margin, entry, agent = rep.max_margin()
    assert (margin, entry, p.agents[agent]) == (1, 1, "beta2")


def test_certify_mirror():
    p = load_fixture("mirror")
    rep = certify_lottery(p, decompose(solve_competitive(p)))
    assert rep.ok
    assert rep.clauses["competitive_floor"] is True


def test_certify_flags_a_bad_lottery():
    p = load_fixture("split_beta")
    everyone_at_a = Assignment((0,) * p.n)
    rep = certify_lottery(p, Lottery(((everyone_at_a, F(1)),)))
    assert not rep.ok
    assert rep.clauses["fair"] is False and rep.failures


def test_certify_skips_floor_with_light_posts():
    # three agents, three posts, one post nobody wants: sigma there is 0
    u = TableUtility(((F(5), F(4), F(3)), (F(5), F(4), F(3)), (F(-9), F(-10), F(-11))))
    p = Problem(("a", "b", "c"), ("x", "y", "z"), (u,) * 3)
    sol = solve_competitive(p)
    assert sol.sigma[2] == 0 and 2 in sol.ambiguous
    rep = certify_lottery(p, decompose(sol))
    assert rep.clauses["competitive_floor"] is None and rep.ok
