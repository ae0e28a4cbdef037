"""
Fractional competitive congestion and its lottery
=================================================

With cardinal utilities, expected loads can clear the market even when no
deterministic assignment does.  The solver returns the loads exactly, then
peels off a lottery of assignments whose loads round them up or down.
"""
# %%
from congestfair import certify_lottery, decompose, load_fixture, solve_competitive
from congestfair.model import fmt

p = load_fixture("mirror")
sol = solve_competitive(p)
print(sol.describe())
print("alpha demands", sorted(p.posts[x] for x in sol.demands[0]))

# %%
impl = decompose(sol)
for P, q in impl.lottery:
    print(fmt(q), [int(s) for s in P.congestion(p)], P.describe(p))

# %%
rep = certify_lottery(p, impl)
print(rep.clauses)

# %%
# two posts, where one indifferent agent carries the randomness
s = load_fixture("split_beta")
impl = decompose(solve_competitive(s))
for P, q in impl.lottery:
    print(fmt(q), P.describe(s))
margin, k, i = certify_lottery(s, impl).max_margin()
print("largest cap overshoot:", margin, "for", s.agents[i], "in entry", k)
