"""
Prefixes and top-fair assignments
=================================

Each agent's caps say how crowded a post may get before the allocation
drops out of the agent's top share.  A top-fair assignment respects
everyone's caps.
"""
# %%
from congestfair import (
    anonymous_prefixes,
    cmax,
    enumerate_top_fair,
    greedy_top_fair,
    load_fixture,
    prefix_profile,
    unique_congestion_test,
)
from congestfair.io import format_assignment

p = load_fixture("four_posts")
caps = prefix_profile(p)
for label in ("alpha1", "beta1", "gamma1", "delta1", "eps1"):
    print(label, [int(c) for c in caps[p.agent_index(label)]])

# %%
# the greedy fills posts in cap order; here it is forced
P = greedy_top_fair(p, caps)
print("greedy:", format_assignment(p, P))
print("cmax:", [int(cmax(p, caps, a)) for a in range(p.m)])
print("single profile?", unique_congestion_test(p, caps))

# %%
# two mirrored types leave a lot of room
q = load_fixture("mirror")
found = enumerate_top_fair(q)
print(len(found.assignments), "assignments over", len(found.congestions), "profiles")
for s in sorted(found.congestions, reverse=True)[:5]:
    print("  ", tuple(int(v) for v in s))

# %%
# ties in a ranking give several prefixes at once
from congestfair import RankedPreference

fam = anonymous_prefixes(RankedPreference(((1, 2), (2, 3))))
print("prefixes:", [tuple(int(c) for c in caps) for caps in fam], "max caps:", tuple(int(c) for c in fam.max_caps))
