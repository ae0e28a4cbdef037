"""Exact solvers for fair assignment when utilities fall with congestion."""
from .competitive import (
    AgreementReport,
    compare_competitive,
    demand_det,
    dominating_assignment,
    exists_strict_improvement,
    find_competitive,
    find_dominator,
    find_fm_equilibrium,
    is_competitive,
    is_crowded,
    is_fm_equilibrium,
    is_semi_strict,
    pareto_dominates,
)
from .decompose import decompose_matrix
from .equilibrium import CompetitiveSolution, SolverError, demand_frac, feasibility, verify
from .fixtures import fixture_names, load_fixture, load_lottery
from .fractional import (
    BoundsReport,
    ImplementationLottery,
    certify_lottery,
    decompose,
    delta,
    solve_competitive,
)
from .guarantees import (
    LimitExceeded,
    PrefixFamily,
    TopFairSet,
    anonymous_prefixes,
    cmax,
    compositions,
    enumerate_top_fair,
    greedy_top_fair,
    greedy_top_fair_anonymous,
    greedy_top_fair_weighted,
    is_top_fair,
    maximality_witness,
    prefix_profile,
    unique_congestion_test,
    weighted_prefix,
)
from .io import ParseError, parse, parse_assignment, parse_lottery, parse_text, serialize
from .model import (
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
)
from .weighted import (
    ViolationReport,
    birkhoff_decompose,
    fairness_violation_report,
    solve_weighted_competitive,
)

__version__ = "0.1.0"
