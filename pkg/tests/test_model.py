from fractions import Fraction as F

import pytest

from congestfair import (
    Assignment,
    Cmp,
    DomainError,
    Lottery,
    ModelError,
    PiecewiseUtility,
    Problem,
    RankedPreference,
    StochasticMatrix,
    TableUtility,
    compare,
    load_fixture,
)
from congestfair.model import as_fraction, eval_utility, fmt


def test_fmt_and_fraction_guard():
    assert fmt(F(14, 3)) == "14/3"
    assert fmt(F(-4, 2)) == "-2"
    assert as_fraction("3/4") == F(3, 4)
    with pytest.raises(ModelError):
        as_fraction(0.5)


def test_interpolation_between_table_points():
    p = load_fixture("split_beta")
    beta2 = p.preferences[p.agent_index("beta2")]
    assert eval_utility(beta2, 0, F(17, 4)) == F(1, 2)
    assert eval_utility(beta2, 0, 4) == 1
    assert eval_utility(beta2, 0, 5) == -1


def test_interpolation_lies_strictly_between():
    u = TableUtility(((F(5), F(2), F(-3)),))
    for t in (F(3, 2), F(7, 4), F(5, 2)):
        k = int(t)
        assert u(0, k + 1) < u(0, t) < u(0, k)


def test_slack_table_is_affine():
    u = TableUtility.slack([6, 4, 2], 12)
    assert u(0, F(14, 3)) == F(4, 3)
    assert u(2, 1) == 1


def test_domain_error_below_floor():
    u = TableUtility.slack([2, 1], 3)
    with pytest.raises(DomainError):
        u(0, F(1, 2))
    w = PiecewiseUtility.slack([5, 3], 2, 5)
    with pytest.raises(DomainError):
        w(0, 1)


def test_monotonicity_checked_on_construction():
    with pytest.raises(ModelError):
        TableUtility(((1, 1),))
    with pytest.raises(ModelError):
        RankedPreference(((1, 1), (2, 3)))
    with pytest.raises(ModelError):
        PiecewiseUtility((((1, 5), (3, 5)),))


def test_compare_ordinal_and_cardinal():
    p = load_fixture("cycle_ranked")
    alpha = p.preferences[p.agent_index("alpha1")]
    beta = p.preferences[p.agent_index("beta1")]
    assert compare(alpha, (0, 3), (0, 5)) is Cmp.BETTER
    assert compare(alpha, (0, 2), (1, 2)) is Cmp.BETTER
    assert compare(beta, (2, 2), (0, 2)) is Cmp.EQUAL
    assert compare(alpha, (1, 2), (0, 2)) is Cmp.WORSE
    u = TableUtility.slack([3, 1], 2)
    assert compare(u, (1, 1), (0, 2)) is Cmp.WORSE


def test_problem_validation():
    u = TableUtility.slack([1], 1)
    with pytest.raises(ModelError):
        Problem(("a",), (), ())
    with pytest.raises(ModelError):
        Problem(("a", "a"), ("x",), (u,))
    with pytest.raises(ModelError):
        Problem(("a",), ("x",), (u,), weights=(0,))
    with pytest.raises(ModelError):
        # weighted agents need utilities on [w_i, W]
        Problem(("a",), ("x", "y"), (PiecewiseUtility.slack([3], 1, 3),) * 2, weights=(1, 1))


def test_problem_accessors():
    p = load_fixture("heavy_pair")
    assert p.weighted and p.total == 21
    assert p.weight(p.agent_index("gamma")) == 1
    assert p.floor(0) == 10
    assert p.post_index("b") == 1
    q = load_fixture("mirror")
    assert not q.weighted and q.total == 12 and q.floor(0) == 1


def test_assignment_views():
    p = load_fixture("heavy_pair")
    P = Assignment.from_groups(p, {"a": ["alpha"], "b": ["beta", "gamma"]})
    assert P.congestion(p) == (10, 11)
    assert P.counts(2) == (1, 2)
    assert P.utilities(p) == (6, 4, 2)
    assert P.labeled(p) == {"alpha": "a", "beta": "b", "gamma": "b"}
    assert P == Assignment.from_labels(p, {"alpha": "a", "beta": "b", "gamma": "b"})
    with pytest.raises(ModelError):
        Assignment.from_groups(p, {"a": ["alpha", "alpha"], "b": ["beta", "gamma"]})
    with pytest.raises(ModelError):
        Assignment.from_groups(p, {"a": ["alpha"]})


def test_lottery_invariants():
    P, Q = Assignment((0, 0)), Assignment((0, 1))
    with pytest.raises(ModelError):
        Lottery(())
    with pytest.raises(ModelError):
        Lottery(((P, F(1, 2)), (Q, F(1, 3))))
    with pytest.raises(ModelError):
        Lottery(((P, 1), (Q, 0)))
    L = Lottery(((Q, F(1, 4)), (P, F(1, 2)), (Q, F(1, 4)))).merged()
    assert L.entries == ((P, F(1, 2)), (Q, F(1, 2)))


def test_stochastic_matrix():
    X = StochasticMatrix(((F(1, 4), F(3, 4)), (1, 0)))
    assert X.column_sums() == (F(5, 4), F(3, 4))
    assert X.column_sums([2, 1]) == (F(3, 2), F(3, 2))
    assert X.support() == (frozenset({0, 1}), frozenset({0}))
    with pytest.raises(ModelError):
        StochasticMatrix(((F(1, 2), F(1, 4)),))
