"""Concession rates, acceptability, and the Nash-product score end to end.

The score multiplies per-party utilities C - (loss + lambda * penalty), so a
set that trades one party's quality for another's is punished twice: once by
the product's curvature and once by the non-consensus penalty.
"""

import numpy as np

from mpfair import (
    ConcessionConfig,
    acceptable_region_membership,
    concession_rate,
    get_problem,
    nash_scores,
    run_asymmetric_sweep,
    run_sweep,
)


def seg(a, b, n):
    t = np.linspace(0.0, 1.0, n)[:, None]
    return np.asarray(a, float) + t * (np.asarray(b, float) - np.asarray(a, float))


# ---------------------------------------------------------------------------
# Concession rates: how far a point asks each party to back off its optimum
# ---------------------------------------------------------------------------
problem, ref = get_problem("case2", density=200)
for point in ((3.0, 2.0), (1.0, 1.0), (5.0, 5.0)):
    x = problem.solution_set(np.array([point]))[0]
    rates = [concession_rate(x, ref, m) for m in (1, 2)]
    print(f"x={point}: concession rates {np.round(rates, 4).tolist()}")

config = ConcessionConfig(gamma_hat=0.0)
x_common = problem.solution_set(np.array([[3.0, 2.0]]))[0]
per_dm, joint = acceptable_region_membership(x_common, ref, config)
print(f"(3,2) acceptable per party {per_dm.tolist()}, jointly {joint} at zero thresholds\n")

# ---------------------------------------------------------------------------
# Balanced vs biased candidate sets under the Nash score
# ---------------------------------------------------------------------------
balanced = problem.solution_set(np.vstack([seg((2.8, 1.9), (3.2, 2.1), 5), seg((2.9, 2.1), (3.1, 1.9), 5)]))
biased = problem.solution_set(seg((2, 3), (4, 1), 10))
rb, rx = nash_scores([balanced, biased], ref, config)
print(f"{'set':<10}{'meanIGD':>9}{'psi_np':>12}{'log_psi':>9}  utilities")
for name, r in (("balanced", rb), ("biased", rx)):
    print(f"{name:<10}{r.mean_igd:>9.3f}{r.psi_np:>12.2f}{r.log_psi_np:>9.3f}  {np.round(r.utilities, 3).tolist()}")
print("The biased set actually wins meanIGD here; the Nash product disagrees.\n")

# ---------------------------------------------------------------------------
# Threshold sweeps: score landscapes over (gamma, gamma_hat)
# ---------------------------------------------------------------------------
axis = np.linspace(0.0, 1.0, 8)
for name in ("case2", "case1"):
    grid = run_sweep(name, gamma_axis=axis, gamma_hat_axis=axis, density=100)
    zero_rows = grid.provenance["empty_rows"]
    print(f"{name}: scores for gamma=0.57 row, thresholds 0..1:")
    print("  ", np.round(grid.scores[4], 1).tolist())
    print(f"   empty acceptable bands at gamma indices {zero_rows}")

scores = run_asymmetric_sweep("case2", 0.4, axis, axis, density=100)
print("\nasymmetric thresholds (fixed population level 0.4): corner scores")
print(f"  strict/strict {scores[0, 0]:.1f}, strict/lax {scores[0, -1]:.1f}, lax/lax {scores[-1, -1]:.1f}")
