"""The contention resolution scheme for uniform and partition matroids.

Given a point x in the polytope of U^k_n and a realized set A, the scheme
keeps A when |A| <= k.  Otherwise it returns a k-subset B of A with
probability

    q_A(B) = (1 + mean(x over A\\B) - mean(x over B)) / C(|A|, k).

Sampling never materializes this table.  A uniform k-subset is proposed and
accepted with probability C(|A|, k) q_A(B) / 2, which always lies in [0, 1].
On average two proposals are needed.  ``enumerate_distribution`` builds the
full table and is meant as a test oracle.

A partition matroid runs an independent copy of the scheme in every block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Union

import numpy as np

from .matroids import (
    DEFAULT_TOL,
    ElementSet,
    FractionalPoint,
    GroundSetMismatch,
    PartitionMatroid,
    UniformMatroid,
    as_point,
    require_in_polytope,
)

TABLE_CAP = 10**6
# above this n the balancedness constants are evaluated in log space
DIRECT_EVAL_MAX_N = 50

SetLike = Union[ElementSet, Iterable[int]]


def _members(A: SetLike) -> tuple:
    if isinstance(A, ElementSet):
        return A.members
    ms = tuple(sorted({int(i) for i in A}))
    return ms


def mean_on(x, A: SetLike) -> float:
    """Average coordinate of ``x`` over ``A``."""
    ms = _members(A)
    if not ms:
        raise ValueError("mean over an empty set is undefined")
    return float(as_point(x).coords[list(ms)].mean())


def q_weight(x, A: SetLike, B: SetLike) -> float:
    """Probability that the scheme returns ``B`` when the realized set is ``A``.

    k is taken to be |B|.  Requires B to be a subset of A and |A| > |B|.
    """
    x = as_point(x)
    a, b = _members(A), _members(B)
    if not set(b) <= set(a):
        raise ValueError("B must be a subset of A")
    m, k = len(a), len(b)
    if m <= k:
        raise ValueError("q_A(B) is only defined for |A| > |B|")
    if k == 0:
        raise ValueError("q_A(B) needs |B| = k >= 1")
    xa = x.total(a)
    xb = x.total(b)
    return (1.0 + (xa - xb) / (m - k) - xb / k) / math.comb(m, k)


@dataclass(frozen=True)
class SubsetDistribution:
    """The full table of q_A over the k-subsets of A.

    ``subsets`` is a (C(|A|,k), k) array of element ids, one row per subset,
    in lexicographic order; ``probabilities`` is aligned with it.
    """

    base: ElementSet
    k: int
    subsets: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        p = self.probabilities
        if p.shape != (self.subsets.shape[0],):
            raise ValueError("one probability per subset expected")
        if np.any(p < 0):
            raise ValueError("negative probability in subset distribution")
        if abs(p.sum() - 1.0) > 1e-12 * max(1, p.size):
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")

    @property
    def entries(self) -> Iterator[tuple[ElementSet, float]]:
        ground = self.base.ground
        for row, p in zip(self.subsets, self.probabilities):
            yield ElementSet(row.tolist(), ground), float(p)

    def masks(self) -> np.ndarray:
        """Bitmask of each subset (``int64``; needs n <= 63)."""
        return (np.int64(1) << self.subsets.astype(np.int64)).sum(axis=1)

    def __len__(self):
        return self.probabilities.size


def q_table(xs: np.ndarray, k: int):
    """All k-subsets of ``range(len(xs))`` and their q-weights, unvalidated.

    Returns ``(positions, weights)`` with positions of shape (C(m,k), k).
    """
    xs = np.asarray(xs, dtype=float)
    m = xs.size
    size = math.comb(m, k)
    pos = np.array(list(combinations(range(m), k)), dtype=np.intp).reshape(size, k)
    xb = xs[pos].sum(axis=1)
    return pos, (1.0 + (xs.sum() - xb) / (m - k) - xb / k) / size


def enumerate_distribution(x, A: ElementSet, k: int, cap: int = TABLE_CAP) -> SubsetDistribution:
    x = as_point(x)
    a = _members(A)
    m = len(a)
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < |A|, got k={k}, |A|={m}")
    size = math.comb(m, k)
    if size > cap:
        raise ValueError(f"C({m},{k}) = {size} exceeds the table cap of {cap}")
    pos, probs = q_table(x.coords[list(a)], k)
    base = A if isinstance(A, ElementSet) else ElementSet(a, x.ground)
    return SubsetDistribution(base, k, np.asarray(a)[pos], probs)


@dataclass(frozen=True)
class SchemeOutcome:
    selected: ElementSet
    truncated: bool


def resolve_rows(realized: np.ndarray, xs: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Run the scheme on every row of a boolean ``(T, m)`` matrix of realized sets.

    ``xs`` holds the m coordinates the columns refer to.  Returns the
    boolean matrix of kept elements.
    """
    realized = np.asarray(realized, dtype=bool)
    xs = np.asarray(xs, dtype=float)
    kept = realized.copy()
    if realized.ndim != 2 or realized.shape[1] != xs.size:
        raise ValueError("realized must be a (T, m) matrix matching xs")
    m = xs.size
    if k >= m:
        return kept
    counts = realized.sum(axis=1)
    pending = np.flatnonzero(counts > k)
    kept[pending] = False
    if k == 0:
        return kept
    while pending.size:
        rows = realized[pending]
        cnt = counts[pending]
        keys = rng.random(rows.shape)
        keys[~rows] = 2.0
        # the k smallest keys among the realized entries form a uniform k-subset
        pick = np.argpartition(keys, k - 1, axis=1)[:, :k]
        xb = xs[pick].sum(axis=1)
        xa = rows @ xs
        accept = 0.5 * (1.0 + (xa - xb) / (cnt - k) - xb / k)
        ok = rng.random(pending.size) < accept
        done = pending[ok]
        kept[done[:, None], pick[ok]] = True
        pending = pending[~ok]
    return kept


def resolve_partition_rows(realized: np.ndarray, x, matroid: PartitionMatroid,
                           rng: np.random.Generator) -> np.ndarray:
    """Blockwise ``resolve_rows``; blocks are processed in order."""
    coords = as_point(x).coords
    realized = np.asarray(realized, dtype=bool)
    kept = np.zeros_like(realized)
    for block, d in zip(matroid.blocks, matroid.capacities):
        cols = list(block.members)
        kept[:, cols] = resolve_rows(realized[:, cols], coords[cols], d, rng)
    return kept


def sample_subsets(x, A: SetLike, k: int, draws: int, rng: np.random.Generator,
                   chunk: int = 1 << 17) -> np.ndarray:
    """``draws`` independent outputs of the scheme on the fixed set ``A``.

    Returns a ``(draws, min(k, |A|))`` array of element ids, each row sorted.
    """
    x = as_point(x)
    a = np.asarray(_members(A), dtype=np.intp)
    m = a.size
    width = min(k, m)
    out = np.empty((draws, width), dtype=np.intp)
    xs = x.coords[a]
    for start in range(0, draws, chunk):
        size = min(chunk, draws - start)
        kept = resolve_rows(np.ones((size, m), dtype=bool), xs, k, rng)
        # every row of kept has exactly `width` True entries
        out[start:start + size] = np.nonzero(kept)[1].reshape(size, width)
    return a[out]


def select(x, A: SetLike, matroid: Union[UniformMatroid, PartitionMatroid],
           rng: np.random.Generator, tol: float = DEFAULT_TOL) -> SchemeOutcome:
    """One run of the scheme on the realized set ``A``.

    Elements of ``A`` with zero coordinate are allowed and handled by the
    same formula.
    """
    if isinstance(matroid, PartitionMatroid):
        return select_partition(x, A, matroid, rng, tol)
    x = as_point(x)
    if x.ground != matroid.ground:
        raise GroundSetMismatch("point and matroid live on different ground sets")
    require_in_polytope(matroid, x, tol)
    a = _members(A)
    if isinstance(A, ElementSet) and A.ground != matroid.ground:
        raise GroundSetMismatch("set and matroid live on different ground sets")
    if len(a) <= matroid.k:
        return SchemeOutcome(ElementSet(a, matroid.ground), False)
    row = np.zeros((1, matroid.n), dtype=bool)
    row[0, list(a)] = True
    kept = resolve_rows(row, x.coords, matroid.k, rng)[0]
    return SchemeOutcome(ElementSet(np.flatnonzero(kept), matroid.ground), True)


def select_partition(x, A: SetLike, matroid: PartitionMatroid, rng: np.random.Generator,
                     tol: float = DEFAULT_TOL) -> SchemeOutcome:
    x = as_point(x)
    if x.ground != matroid.ground:
        raise GroundSetMismatch("point and matroid live on different ground sets")
    require_in_polytope(matroid, x, tol)
    a = _members(A)
    if isinstance(A, ElementSet) and A.ground != matroid.ground:
        raise GroundSetMismatch("set and matroid live on different ground sets")
    row = np.zeros((1, matroid.n), dtype=bool)
    row[0, list(a)] = True
    truncated = any(row[0, list(b.members)].sum() > d
                    for b, d in zip(matroid.blocks, matroid.capacities))
    kept = resolve_partition_rows(row, x, matroid, rng)[0]
    return SchemeOutcome(ElementSet(np.flatnonzero(kept), matroid.ground), truncated)


def marginal(x, A: SetLike, e: int, k: int) -> float:
    """P[e is kept] when the realized set is ``A``, in closed form."""
    x = as_point(x)
    a = _members(A)
    if e not in a:
        raise ValueError(f"element {e} is not in A")
    m = len(a)
    if m <= k:
        return 1.0
    if k == 0:
        return 0.0
    xe = float(x.coords[e])
    rest = x.total(a) - xe
    return (k - xe) / m + rest / (m * (m - 1))


EXACT_LOG_BINOM_MAX_K = 2000


def log_binom(n: int, k: int) -> float:
    # the lgamma difference cancels badly for huge n and small k; math.log takes big ints
    if min(k, n - k) <= EXACT_LOG_BINOM_MAX_K:
        return math.log(math.comb(n, k))
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _drop_mass(k: int, n: int) -> float:
    """C(n,k) (1-k/n)^(n+1-k) (k/n)^k for 1 <= k <= n-1."""
    if n <= DIRECT_EVAL_MAX_N:
        return math.comb(n, k) * (1 - k / n) ** (n + 1 - k) * (k / n) ** k
    return math.exp(log_binom(n, k) + (n + 1 - k) * math.log1p(-k / n) + k * math.log(k / n))


def balancedness_c(k: int, n: int) -> float:
    """Balancedness of the scheme on U^k_n; 1 when k >= n."""
    if k < 1 or n < 1:
        raise ValueError(f"balancedness needs k >= 1 and n >= 1, got k={k}, n={n}")
    if k >= n:
        return 1.0
    return 1.0 - _drop_mass(k, n)


def balancedness_limit(k: int) -> float:
    """Limit of balancedness_c(k, n) as n grows: 1 - e^-k k^k / k!."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    return 1.0 - math.exp(-k + k * math.log(k) - math.lgamma(k + 1))


def alpha(k: int, n: int) -> float:
    """k C(n,k) (1-k/n)^(n+1-k) (k/n)^k, the maximum of h over the unit cube."""
    if n < 1 or not 0 <= k <= n:
        raise ValueError(f"alpha needs 0 <= k <= n, n >= 1; got k={k}, n={n}")
    if k == 0 or k == n:
        return 0.0
    return k * _drop_mass(k, n)


def block_balancedness(d: int, size: int) -> float:
    # a zero-capacity block forces x = 0 on it, so none of its elements is ever realized
    if d == 0 or d >= size:
        return 1.0
    return balancedness_c(d, size)


def partition_balancedness(matroid: PartitionMatroid) -> float:
    return min(block_balancedness(d, len(b)) for b, d in zip(matroid.blocks, matroid.capacities))


def symmetric_point(matroid: Union[UniformMatroid, PartitionMatroid]) -> FractionalPoint:
    """k/n everywhere, or d_i/|D_i| on each block of a partition matroid."""
    if isinstance(matroid, UniformMatroid):
        return FractionalPoint.constant(matroid.n, matroid.k / matroid.n)
    coords = np.empty(matroid.n)
    for b, d in zip(matroid.blocks, matroid.capacities):
        coords[list(b.members)] = d / len(b)
    return FractionalPoint(coords)


def element_balancedness(matroid: Union[UniformMatroid, PartitionMatroid], e: int) -> float:
    """Guaranteed keep rate for element ``e``: its own block's constant."""
    if isinstance(matroid, UniformMatroid):
        return balancedness_c(matroid.k, matroid.n) if matroid.k else 1.0
    i = matroid.block_of(e)
    return block_balancedness(matroid.capacities[i], len(matroid.blocks[i]))


def scheme_balancedness(matroid: Union[UniformMatroid, PartitionMatroid]) -> float:
    if isinstance(matroid, UniformMatroid):
        return balancedness_c(matroid.k, matroid.n) if matroid.k else 1.0
    return partition_balancedness(matroid)


__all__ = [
    "SchemeOutcome", "SubsetDistribution", "alpha", "balancedness_c", "balancedness_limit",
    "block_balancedness", "element_balancedness", "enumerate_distribution", "log_binom",
    "marginal", "mean_on", "partition_balancedness", "q_table", "q_weight", "resolve_partition_rows",
    "resolve_rows", "sample_subsets", "scheme_balancedness", "select", "select_partition",
    "symmetric_point",
]
