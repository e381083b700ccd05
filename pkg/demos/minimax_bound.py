"""The local minimax lower bound at t0 and a Monte Carlo look at the two-point risk.

Run: python3 demos/minimax_bound.py
"""

from crcs.simulation import D_CONSTANT, minimax_bound, optimal_c, two_point_risk
from crcs.truth import default_truth, local_truth

tm = default_truth()
t0 = 1.0
lt = local_truth(tm, t0)
print(f"d = {D_CONSTANT:.15f}")
print(f"at t0 = {t0}: F_01 = {lt.F0k_at_t0[0]:.4f}, f_01 = {lt.f0k_at_t0[0]:.4f}, g = {lt.g_at_t0:.4f}")

for r in (1, 2):
    b = minimax_bound(lt, 1, r)
    print(f"r = {r}: joint bound {b['bound']:.5f}, bound from cause-1 data alone {b['single_risk']:.5f}")

c = optimal_c(lt, 1)
print(f"window constant maximizing the bound: c = {c:.4f}")

# The bound is asymptotic and may not be sharp, so the scaled risk should sit above it.
for n in (500, 2000):
    res = two_point_risk(tm, 1, c, n, t0, reps=20, seed=3)
    print(f"n = {n}: n^(1/3) max risk {res['scaled_max_risk']:.4f} vs bound {res['bound']:.4f}")
