"""Scoring without known Pareto fronts: the comparative Nash product.

When reference fronts are unavailable, each party's gain-type metric (here
hypervolume) is normalized by the best value any compared set achieves for
that party; the product of normalized utilities rewards sets that do well
for everyone rather than brilliantly for one party.
"""

import numpy as np

from mpfair import EaConfig, comparative_nash, default_hv_reference, get_problem, hv_party, opt_all, opt_mpnds

# ---------------------------------------------------------------------------
# Synthetic gains first: the mechanics in isolation
# ---------------------------------------------------------------------------
gains = np.array(
    [
        [10.0, 10.0],  # balanced
        [16.0, 5.0],  # strong for party 1 only
        [6.0, 12.0],  # leaning party 2
    ]
)
scores = comparative_nash(gains)
for row, s in zip(gains, scores):
    print(f"gains {row.tolist()} -> comparative score {s:.3f}")
print("scaling any party's column leaves scores unchanged:",
      np.allclose(scores, comparative_nash(gains * np.array([3.0, 0.5]))))

# ---------------------------------------------------------------------------
# The same machinery on real candidate sets (per-party HV as the gain)
# ---------------------------------------------------------------------------
problem, ref = get_problem("case2", density=100)
hv_ref = default_hv_reference(ref)
cfg = EaConfig(population_size=30, generations=40, seed=21)
sets = {"opt_all": opt_all(problem, cfg), "opt_mpnds": opt_mpnds(problem, cfg)}

G = np.array([[hv_party(pop, hv_ref, m) for m in (1, 2)] for pop in sets.values()])
scores = comparative_nash(G)
print("\nper-party hypervolume gains and comparative scores:")
for (name, _), g, s in zip(sets.items(), G, scores):
    print(f"  {name:<10} HV {np.round(g, 1).tolist()} -> {s:.3f}")
print("\nNo reference front, no penalties: only relative balance across parties.")
