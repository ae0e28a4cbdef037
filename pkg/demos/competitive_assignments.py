"""
Deterministic competitive assignments
=====================================

Congestion acts as a price.  An assignment is competitive when nobody
wants to switch to another post at that post's current load (an empty post
is priced as if the agent were alone there).
"""
# %%
from congestfair import (
    find_competitive,
    find_dominator,
    find_fm_equilibrium,
    is_competitive,
    is_fm_equilibrium,
    load_fixture,
    parse_assignment,
)

p = load_fixture("cycle_slack")
for P in find_competitive(p):
    print("competitive:", P.describe(p), "utilities", [int(u) for u in P.utilities(p)])

# %%
# a stable but worse outcome: everyone sits at their second choice
Q = parse_assignment(p, "a:gamma1,gamma2 b:alpha1,alpha2 c:beta1,beta2")
print("free-mobility equilibrium?", is_fm_equilibrium(p, Q))
print("competitive?", is_competitive(p, Q))
print("a Pareto improvement:", find_dominator(p, Q).describe(p))

# %%
# ordinal preferences with a tie work the same way
r = load_fixture("cycle_ranked")
print([P.describe(r) for P in find_competitive(r)])
print("dynamics settle on", find_fm_equilibrium(r, seed=1).describe(r))

# %%
# sometimes nothing is competitive
print("mirror:", find_competitive(load_fixture("mirror")))
