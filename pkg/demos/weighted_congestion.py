"""
Weighted congestion
===================

Heavy agents push congestion up more than light ones.  Loads are weight
sums, and an empty post is priced at the mover's own weight.
"""
# %%
from congestfair import (
    birkhoff_decompose,
    fairness_violation_report,
    load_fixture,
    load_lottery,
    prefix_profile,
    solve_weighted_competitive,
)
from congestfair.model import fmt

p = load_fixture("heavy_pair")
print("caps", {a: [fmt(c) for c in caps] for a, caps in zip(p.agents, prefix_profile(p))})

# %%
sol = solve_weighted_competitive(p)
print(sol.describe(), "f-crowded:", sol.f_crowded)
for P, q in birkhoff_decompose(sol):
    print(fmt(q), P.describe(p))

# %%
# two hand-made lotteries and how often each breaks top-fairness
for name in ("heavy_pair_even", "heavy_pair_skewed"):
    L = load_lottery(p, name)
    r = fairness_violation_report(p, L)
    print(name, "violation probability", fmt(r.violation_probability),
          "worst overshoot", fmt(r.worst_margin))
