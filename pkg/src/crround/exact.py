"""Exact evaluation of the polynomials behind the balancedness analysis.

Everything here is brute force over subsets of a small ground set (bitmask
enumeration, n <= 24) or a closed form that the brute force checks.  The
enumerations build their tables by doubling: after processing coordinate i,
index j of a table refers to the subset whose bits are set in j.

Sums over 2^n terms go through ``np.sum`` on contiguous arrays, which uses
pairwise summation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations, combinations_with_replacement
from typing import Callable, Optional, Sequence

import numpy as np

from .matroids import ElementSet, FractionalPoint, GroundSet, UniformMatroid, as_point
from .scheme import DIRECT_EVAL_MAX_N, alpha, log_binom, resolve_rows

MAX_ENUM_N = 24
MAX_G_N = 20
MAX_GRID_DIM = 5
GRADIENT_STEP = 1e-5
HESSIAN_STEP = 1e-3


@dataclass(frozen=True, init=False)
class AnalysisContext:
    """Ground set, rank k, and the distinguished element e (S = N minus e)."""

    ground: GroundSet
    k: int
    e: int

    def __init__(self, ground, k: int, e: int = 0):
        if not isinstance(ground, GroundSet):
            ground = GroundSet(ground)
        if ground.n > MAX_ENUM_N:
            raise ValueError(f"exact analysis supports n <= {MAX_ENUM_N}, got {ground.n}")
        if not 0 <= e < ground.n:
            raise ValueError(f"element {e} not in ground set of size {ground.n}")
        if not 1 <= k <= ground.n - 1:
            raise ValueError(f"need 1 <= k <= n-1, got k={k}, n={ground.n}")
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "k", int(k))
        object.__setattr__(self, "e", int(e))

    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def S(self) -> ElementSet:
        return self.ground.full().difference([self.e])


def _members(S) -> list:
    return list(S.members) if isinstance(S, ElementSet) else sorted({int(i) for i in S})


def _coords(x, S) -> np.ndarray:
    return as_point(x).coords[_members(S)]


def subset_tables(X: np.ndarray):
    """Probability, coordinate sum and size of every subset.

    ``X`` has shape ``(..., m)``.  Returns ``(p, s, pop)`` where ``p`` and
    ``s`` have shape ``(..., 2**m)`` and ``pop`` has shape ``(2**m,)``.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[-1]
    if m > MAX_ENUM_N:
        raise ValueError(f"enumeration over 2^{m} subsets exceeds the cap of 2^{MAX_ENUM_N}")
    lead = X.shape[:-1]
    p = np.empty(lead + (1 << m,))
    s = np.empty(lead + (1 << m,))
    pop = np.empty(1 << m, dtype=np.int64)
    p[..., 0] = 1.0
    s[..., 0] = 0.0
    pop[0] = 0
    for i in range(m):
        size = 1 << i
        xi = X[..., i:i + 1]
        p[..., size:2 * size] = p[..., :size] * xi
        p[..., :size] *= 1.0 - xi
        s[..., size:2 * size] = s[..., :size] + xi
        pop[size:2 * size] = pop[:size] + 1
    return p, s, pop


def p_weight(x, S, A) -> float:
    """P[R_S(x) = A]."""
    x = as_point(x)
    s, a = _members(S), _members(A)
    if not set(a) <= set(s):
        raise ValueError("A must be a subset of S")
    inside = set(a)
    out = [i for i in s if i not in inside]
    return float(np.prod(x.coords[a]) * np.prod(1.0 - x.coords[out]))


def level_probabilities(x, S) -> np.ndarray:
    """Distribution of |R_S(x)| (a Poisson binomial), by dynamic programming."""
    xs = _coords(x, S)
    dist = np.zeros(xs.size + 1)
    dist[0] = 1.0
    for j, xi in enumerate(xs):
        dist[1:j + 2] = dist[1:j + 2] * (1.0 - xi) + dist[:j + 1] * xi
        dist[0] *= 1.0 - xi
    return dist


def q_level(x, S, k: int) -> float:
    """P[|R_S(x)| = k]."""
    m = len(_members(S))
    if not 0 <= k <= m:
        raise ValueError(f"level k={k} outside 0..{m}")
    return float(level_probabilities(x, S)[k])


def h_values(XS: np.ndarray, k: int) -> np.ndarray:
    """h^k over the columns of ``XS`` (shape ``(P, m)``), by enumeration."""
    XS = np.atleast_2d(np.asarray(XS, dtype=float))
    m = XS.shape[1]
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0 or k > m:
        return np.zeros(XS.shape[0])
    p, s, pop = subset_tables(XS)
    level = pop == k
    return np.sum(p[:, level] * (k - s[:, level]), axis=1)


def h_value(x, S, k: int) -> float:
    """sum over k-subsets A of S of P[R_S(x) = A] (k - x(A)).

    Zero for k = 0 and for k > |S|.
    """
    return float(h_values(_coords(x, S)[None, :], k)[0])


def h_value_recursive(x, S, k: int) -> float:
    """h^k from the level probabilities: sum_{i<k} Q^i (x(S) - i)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    xs = _coords(x, S)
    q = level_probabilities(x, S)
    total = xs.sum()
    return float(sum(q[i] * (total - i) for i in range(min(k, q.size))))


def h_gradient(x, S, k: int) -> np.ndarray:
    """Closed-form partials of h^k over i in S: Q_{S-i}^{k-1} (k - x(S) - x_i)."""
    s = _members(S)
    if not 1 <= k <= len(s):
        raise ValueError(f"need 1 <= k <= |S|, got k={k}, |S|={len(s)}")
    x = as_point(x)
    total = x.total(s)
    grad = np.empty(len(s))
    for j, i in enumerate(s):
        rest = [t for t in s if t != i]
        grad[j] = level_probabilities(x, rest)[k - 1] * (k - total - x.coords[i])
    return grad


def fd_gradient(f: Callable[[np.ndarray], float], x0, step: float = GRADIENT_STEP) -> np.ndarray:
    """Central-difference gradient."""
    x0 = np.asarray(x0, dtype=float)
    grad = np.empty(x0.size)
    for i in range(x0.size):
        up, down = x0.copy(), x0.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (f(up) - f(down)) / (2 * step)
    return grad


def fd_hessian(f: Callable[[np.ndarray], float], x0, step: float = HESSIAN_STEP) -> np.ndarray:
    """Second-order central differences, symmetrized."""
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    f0 = f(x0)
    hess = np.empty((d, d))
    E = np.eye(d) * step
    for i in range(d):
        hess[i, i] = (f(x0 + E[i]) - 2 * f0 + f(x0 - E[i])) / step**2
        for j in range(i + 1, d):
            v = (f(x0 + E[i] + E[j]) - f(x0 + E[i] - E[j])
                 - f(x0 - E[i] + E[j]) + f(x0 - E[i] - E[j])) / (4 * step**2)
            hess[i, j] = hess[j, i] = v
    return hess


@dataclass(frozen=True)
class GradientReport:
    analytic: np.ndarray = field(compare=False)
    numeric: np.ndarray = field(compare=False)
    max_abs_diff: float
    step: float


def check_h_gradient(x, S, k: int, step: float = GRADIENT_STEP) -> GradientReport:
    """Closed-form gradient of h^k against central differences of the enumeration."""
    x = as_point(x)
    s = _members(S)
    analytic = h_gradient(x, s, k)

    def f(v):
        return float(h_values(v[None, :], k)[0])

    numeric = fd_gradient(f, x.coords[s], step)
    return GradientReport(analytic, numeric, float(np.max(np.abs(analytic - numeric))), step)


def hessian_scale(k: int, n: int) -> float:
    """C(n-2,k-1) (k/n)^(k-1) ((n-k)/n)^(n-k-1)."""
    if n < 2 or not 1 <= k <= n - 1:
        raise ValueError(f"need n >= 2 and 1 <= k <= n-1, got k={k}, n={n}")
    if n <= DIRECT_EVAL_MAX_N:
        return math.comb(n - 2, k - 1) * (k / n) ** (k - 1) * ((n - k) / n) ** (n - k - 1)
    return math.exp(log_binom(n - 2, k - 1) + (k - 1) * math.log(k / n)
                    + (n - k - 1) * math.log1p(-k / n))


def hessian_at_center(k: int, n: int) -> np.ndarray:
    """Hessian of h^k_S at (k/n, ..., k/n): -c (I + J) of size n-1."""
    c = hessian_scale(k, n)
    return -c * (np.eye(n - 1) + np.ones((n - 1, n - 1)))


def _check_g_size(n: int):
    if n > MAX_G_N:
        raise ValueError(f"G enumeration supports n <= {MAX_G_N}, got {n}")


def _supersets(b: int, free: Sequence[int]) -> np.ndarray:
    idx = np.array([b], dtype=np.int64)
    for j in free:
        idx = np.concatenate([idx, idx | (1 << j)])
    return idx


def g_values(ctx: AnalysisContext, X: np.ndarray) -> np.ndarray:
    """G at each row of ``X`` (shape ``(P, n)``): P[e dropped | e realized].

    Double sum over A subset of S with |A| >= k and k-subsets B of A of
    q_{A+e}(B).  Rows are not required to satisfy x_e > 0.
    """
    _check_g_size(ctx.n)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != ctx.n:
        raise ValueError(f"points must have {ctx.n} coordinates")
    k = ctx.k
    s = list(ctx.S.members)
    m = len(s)
    pS, sS, pop = subset_tables(X[:, s])
    xe = X[:, ctx.e:ctx.e + 1]
    norm = np.array([math.comb(j + 1, k) for j in range(m + 1)], dtype=float)
    total = np.zeros(X.shape[0])
    for b_pos in combinations(range(m), k):
        b = sum(1 << j for j in b_pos)
        idx = _supersets(b, [j for j in range(m) if j not in b_pos])
        xb = sS[:, b:b + 1]
        size = pop[idx]
        q = (1.0 + (sS[:, idx] - xb + xe) / (size - k + 1) - xb / k) / norm[size]
        total += np.sum(pS[:, idx] * q, axis=1)
    return total


def g_value(ctx: AnalysisContext, x) -> float:
    x = as_point(x)
    return float(g_values(ctx, x.coords[None, :])[0])


def g_via_simulation_consistency(ctx: AnalysisContext, x, trials: int, rng: np.random.Generator,
                                 chunk: int = 1 << 16) -> float:
    """Monte Carlo estimate of G: draw R(x), keep draws containing e, run the scheme.

    ``trials`` counts the draws that contain e.
    """
    x = as_point(x)
    if x.n != ctx.n:
        raise ValueError(f"point must have {ctx.n} coordinates")
    if x.coords[ctx.e] <= 0:
        raise ValueError("x_e = 0: the conditioning event has probability zero")
    if trials < 1:
        raise ValueError("trials must be positive")
    dropped, seen = 0, 0
    while seen < trials:
        R = rng.random((chunk, ctx.n)) < x.coords
        R = R[R[:, ctx.e]][:trials - seen]
        kept = resolve_rows(R, x.coords, ctx.k, rng)
        dropped += int(np.count_nonzero(~kept[:, ctx.e]))
        seen += R.shape[0]
    return dropped / trials


def expected_rank(matroid: UniformMatroid, x) -> float:
    """E[min(|R(x)|, k)] by enumeration over all subsets."""
    x = as_point(x)
    if x.n != matroid.n:
        raise ValueError("point and matroid sizes differ")
    p, _, pop = subset_tables(x.coords)
    return float(np.sum(p * np.minimum(pop, matroid.k)))


def optimality_bound(k: int, n: int) -> float:
    """Upper bound E[r(R(x))]/k on any scheme's balancedness, at x = k/n."""
    if n < 2 or not 1 <= k <= n - 1:
        raise ValueError(f"need n >= 2 and 1 <= k <= n-1, got k={k}, n={n}")
    return expected_rank(UniformMatroid(n, k), FractionalPoint.constant(n, k / n)) / k


@dataclass
class AlphaReport:
    n_max: int
    checked: int = 0
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def alpha_inequality_check(n_max: int) -> AlphaReport:
    """alpha(k,n) > alpha(k-1,n-1) and alpha(k,n) > alpha(k,n-1) for 2 <= n <= n_max."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    report = AlphaReport(n_max)
    for n in range(2, n_max + 1):
        for k in range(1, n):
            a = alpha(k, n)
            for label, rhs in (("shrink-both", alpha(k - 1, n - 1)), ("shrink-n", alpha(k, n - 1))):
                report.checked += 1
                if not a > rhs:
                    report.violations.append((k, n, label, a, rhs))
    return report


def polytope_filter(k: float, slack: float = 1e-12) -> Callable[[np.ndarray], np.ndarray]:
    """Row mask for points with coordinate sum at most ``k``."""
    return lambda P: P.sum(axis=1) <= k + slack


def grid_maximize(f: Callable[[np.ndarray], np.ndarray], dim: int, resolution: int, *,
                  snap: int = 1, feasible: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  symmetric_axes: Sequence[int] = (), chunk: int = 1 << 18):
    """Maximize a vectorized ``f`` over the grid {0, 1/r, ..., 1}^dim.

    ``r`` is ``resolution`` rounded up to a multiple of ``snap``.  When ``f``
    is invariant under permuting ``symmetric_axes``, only grid points that are
    non-decreasing along those axes are visited.  ``feasible`` drops points
    before evaluation.  Returns ``(argmax point, max value)``; the first
    maximizer in visiting order wins ties.
    """
    if dim < 1 or dim > MAX_GRID_DIM:
        raise ValueError(f"grid dimension must be between 1 and {MAX_GRID_DIM}, got {dim}")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    res = -(-resolution // snap) * snap
    sym = sorted(set(symmetric_axes))
    free = [a for a in range(dim) if a not in sym]
    side = res + 1
    if sym:
        sym_rows = np.array(list(combinations_with_replacement(range(side), len(sym))), dtype=np.int64)
    else:
        sym_rows = np.zeros((1, 0), dtype=np.int64)
    n_free = side ** len(free)
    total = sym_rows.shape[0] * n_free
    best_val, best_pt = -np.inf, None
    for start in range(0, total, chunk):
        lin = np.arange(start, min(start + chunk, total), dtype=np.int64)
        pts = np.empty((lin.size, dim))
        pts[:, sym] = sym_rows[lin // n_free]
        if free:
            pts[:, free] = np.stack(np.unravel_index(lin % n_free, (side,) * len(free)), axis=1)
        pts /= res
        if feasible is not None:
            pts = pts[feasible(pts)]
            if pts.shape[0] == 0:
                continue
        vals = f(pts)
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best_val, best_pt = float(vals[j]), pts[j].copy()
    if best_pt is None:
        raise ValueError("no feasible grid point")
    return best_pt, best_val
