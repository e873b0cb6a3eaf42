"""Tour of the domain types: dominance relations, built-in problems, references.

Run with `python demos/01_dominance_and_problems.py`.
"""

import numpy as np

from mpfair import (
    dominates_multiparty,
    dominates_party,
    evaluate,
    get_problem,
    mpdmp_case1,
    mpdmp_case2,
    nondominated_filter,
    reference_to_csv,
    weakly_dominates,
)

# ---------------------------------------------------------------------------
# Party-wise and multi-party dominance
# ---------------------------------------------------------------------------
problem1, ref1 = get_problem("case1", density=100)
pop = problem1.solution_set(np.array([[2.0, 2.0], [2.0, 1.0], [4.0, 2.0], [2.0, 2.0]]))

a, b = pop[0], pop[1]
print("party-1 relation between (2,2) and (2,1):", dominates_party(a.block(1), b.block(1)).value)
print("weak party-1 dominance (componentwise <=):", weakly_dominates(a.block(1), b.block(1)))
print("multi-party dominance (needs every party):", dominates_multiparty(a, b))

survivors = nondominated_filter(pop, scope="joint")
print(f"joint non-dominated filter keeps {len(survivors)} of {len(pop)} points")
print("(duplicates are retained; dedup is the caller's choice)\n")

# ---------------------------------------------------------------------------
# The two illustrative distance-minimization cases
# ---------------------------------------------------------------------------
# case1: the parties' Pareto sets are parallel, disjoint segments.
# case2: the segments cross at (3, 2), a strictly common optimum.
for spec in (mpdmp_case1(), mpdmp_case2()):
    print(f"{spec.name}: party targets")
    for party_id, targets in spec.parties:
        print(f"  party {party_id}: {targets.tolist()}")

print("\ncase1 objectives at (1, 1):", [v.round(4).tolist() for v in evaluate(mpdmp_case1(), (1, 1))])
print("case2 objectives at (3, 2):", [v.round(4).tolist() for v in evaluate(mpdmp_case2(), (3, 2))])

# ---------------------------------------------------------------------------
# Reference sets: analytic Pareto segments, sampled
# ---------------------------------------------------------------------------
_, ref2 = get_problem("case2", density=100)
a_ps = ref2.parties[0].ps_samples
b_ps = ref2.parties[1].ps_samples
d = np.sqrt(((a_ps[:, None, :] - b_ps[None, :, :]) ** 2).sum(axis=2))
print(f"\ncase2 reference: {a_ps.shape[0]} + {b_ps.shape[0]} PS samples")
print("closest cross-party sample distance:", d.min(), "(the exact intersection is carried)")

d1 = np.sqrt(
    ((ref1.parties[0].ps_samples[:, None, :] - ref1.parties[1].ps_samples[None, :, :]) ** 2).sum(axis=2)
)
print("case1 closest cross-party sample distance:", round(d1.min(), 4), "(disjoint segments)")

csv_head = "\n".join(reference_to_csv(ref2).splitlines()[:4])
print("\nreference CSV export starts with:")
print(csv_head)
