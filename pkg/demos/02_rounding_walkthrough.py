"""Round one fractional point by hand, then check the keep frequencies."""
import numpy as np

from crround import ElementSet, FractionalPoint, UniformMatroid, enumerate_distribution, marginal, select
from crround.montecarlo import sample_R, estimate_marginal, TrialConfig

rng = np.random.default_rng(2024)
U = UniformMatroid(6, 2)
x = FractionalPoint([0.1, 0.5, 0.3, 0.6, 0.2, 0.3])
print("x =", x.coords, " x(N) =", x.total())

# Step 1: every element shows up independently with probability x_i.
R = sample_R(x, rng)
print("realized set R(x):", list(R))

# Step 2: if R is too big, the scheme keeps a k-subset. Elements with a small
# coordinate are favored, which is what pays for keeping rare elements often.
out = select(x, R, U, rng)
print("kept:", list(out.selected), "truncated:", out.truncated)

# The exact distribution over k-subsets of a fixed realized set.
A = ElementSet([0, 1, 2, 3], 6)
dist = enumerate_distribution(x, A, 2)
for subset, p in dist.entries:
    print(f"  {list(subset)}  {p:.4f}")
print("total:", dist.probabilities.sum())

# Per-element marginals: closed form next to simulation.
freq = estimate_marginal(x, A, 2, TrialConfig(200000, seed=1))
for e in A:
    print(f"element {e}: closed form {marginal(x, A, e, 2):.4f}  simulated {freq[e]:.4f}")
