"""Estimate conditional keep rates and compare them with c(k, n)."""
import numpy as np

from crround import UniformMatroid
from crround.montecarlo import TrialConfig, estimate_balancedness, random_polytope_point
from crround.scheme import balancedness_c, symmetric_point

for n, k in [(5, 2), (10, 3), (10, 9)]:
    U = UniformMatroid(n, k)
    c = balancedness_c(k, n)
    ests = estimate_balancedness(U, symmetric_point(U), TrialConfig(10**6, seed=n * k, parallel_shards=4))
    worst = max(abs(e.conditional_keep - c) / e.std_error for e in ests)
    print(f"U({n},{k}) at k/n: c = {c:.5f}, estimates {min(e.conditional_keep for e in ests):.5f}"
          f"..{max(e.conditional_keep for e in ests):.5f}, worst deviation {worst:.2f} se")

# Away from the symmetric point the guarantee still holds, usually with room to spare.
rng = np.random.default_rng(0)
U = UniformMatroid(8, 3)
c = balancedness_c(3, 8)
for i in range(5):
    x = random_polytope_point(U, rng)
    ests = [e for e in estimate_balancedness(U, x, TrialConfig(200000, seed=i)) if e.trials_conditioned >= 30]
    low = min(ests, key=lambda e: e.conditional_keep)
    print(f"random x #{i}: x(N) = {x.total():.2f}, lowest keep rate {low.conditional_keep:.4f}"
          f" (element {low.element}) vs c = {c:.4f}")
