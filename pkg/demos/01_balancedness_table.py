"""How the guaranteed keep rate c(k, n) moves with the rank k and ground set size n."""
import numpy as np

from crround.scheme import balancedness_c, balancedness_limit

ns = [2, 3, 4, 5, 10, 100, 1000]
ks = [1, 2, 3, 4, 9, 99, 999]

print("c(k, n); blank where k >= n")
print("n".rjust(6) + "".join(f"k={k}".rjust(9) for k in ks))
for n in ns:
    cells = [f"{balancedness_c(k, n):9.4f}" if k < n else " " * 9 for k in ks]
    print(f"{n:6d}" + "".join(cells))
print(" limit" + "".join(f"{balancedness_limit(k):9.4f}" for k in ks))

# For fixed k the constant falls as n grows but never reaches its limit.
k = 3
sizes = np.unique(np.geomspace(k + 1, 10**7, 12).astype(int))
for n in sizes:
    gap = balancedness_c(k, n) - balancedness_limit(k)
    print(f"k={k} n={n:>9d} c - limit = {gap:.3e}")

# For k = 1 the constant is 1 - (1 - 1/n)^n, the familiar 1 - 1/e curve.
for n in [2, 10, 100]:
    print(n, balancedness_c(1, n), 1 - (1 - 1 / n) ** n)
