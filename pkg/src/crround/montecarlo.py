"""Monte Carlo checks of the scheme at sizes where enumeration is infeasible.

Trials are split into shards.  Each shard draws from its own generator,
spawned from ``SeedSequence(seed)``, so a fixed (seed, shards, trials)
always gives the same counts.  Shard counts are merged in shard order.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import NamedTuple, Union

import numpy as np

from .matroids import (
    DEFAULT_TOL,
    ElementSet,
    FractionalPoint,
    PartitionMatroid,
    UniformMatroid,
    as_point,
    require_in_polytope,
    support,
)
from .scheme import (
    enumerate_distribution,
    marginal,
    resolve_partition_rows,
    resolve_rows,
    sample_subsets,
)

Matroid = Union[UniformMatroid, PartitionMatroid]

CHUNK = 1 << 16


@dataclass(frozen=True)
class TrialConfig:
    trials: int
    seed: int = 0
    z: float = 3.0
    parallel_shards: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.parallel_shards < 1:
            raise ValueError("parallel_shards must be at least 1")
        if self.z <= 0:
            raise ValueError("z must be positive")

    def shard_seeds(self) -> list:
        return np.random.SeedSequence(self.seed).spawn(self.parallel_shards)

    def shard_trials(self) -> list:
        base, extra = divmod(self.trials, self.parallel_shards)
        return [base + (i < extra) for i in range(self.parallel_shards)]


def _map_shards(fn, cfg: TrialConfig):
    jobs = list(zip(cfg.shard_trials(), cfg.shard_seeds()))
    if cfg.parallel_shards == 1:
        return [fn(*jobs[0])]
    with ThreadPoolExecutor(max_workers=cfg.parallel_shards) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


@dataclass(frozen=True)
class BalancednessEstimate:
    element: int
    conditional_keep: float
    trials_conditioned: int
    std_error: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, element: int, kept: int, seen: int, z: float) -> "BalancednessEstimate":
        if seen == 0:
            nan = float("nan")
            return cls(element, nan, 0, nan, nan, nan)
        p = kept / seen
        se = math.sqrt(p * (1 - p) / seen)
        return cls(element, p, seen, se, p - z * se, p + z * se)

    @property
    def defined(self) -> bool:
        return self.trials_conditioned > 0


def sample_R(x, rng: np.random.Generator) -> ElementSet:
    """Include each element independently with probability x_i."""
    x = as_point(x)
    return ElementSet(np.flatnonzero(rng.random(x.n) < x.coords), x.ground)


def random_polytope_point(matroid: Matroid, rng: np.random.Generator) -> FractionalPoint:
    """Uniform draw from the unit cube, scaled down blockwise into the polytope.

    Scaling by a factor below one cannot push a coordinate past 1, so no
    clamping is ever needed.
    """
    coords = rng.random(matroid.n)
    if isinstance(matroid, UniformMatroid):
        blocks = [(list(range(matroid.n)), matroid.k)]
    else:
        blocks = [(list(b.members), d) for b, d in zip(matroid.blocks, matroid.capacities)]
    for cols, cap in blocks:
        total = coords[cols].sum()
        if total > cap:
            coords[cols] *= cap / total
    return FractionalPoint(coords)


def random_tight_point(n: int, k: int, rng: np.random.Generator) -> FractionalPoint:
    """Random point of [0,1]^n with coordinate sum exactly k (rejection sampling).

    For k > n/2 the complement 1 - y of a point with sum n - k is returned,
    which keeps the acceptance rate reasonable.
    """
    if not 0 < k < n:
        raise ValueError(f"need 0 < k < n, got k={k}, n={n}")
    target = min(k, n - k)
    while True:
        y = rng.random(n)
        y *= target / y.sum()
        if y.max() <= 1.0:
            break
    coords = y if target == k else 1.0 - y
    return FractionalPoint(np.clip(coords, 0.0, 1.0))


def _resolve(matroid: Matroid, R: np.ndarray, x: FractionalPoint, rng) -> np.ndarray:
    if isinstance(matroid, UniformMatroid):
        return resolve_rows(R, x.coords, matroid.k, rng)
    return resolve_partition_rows(R, x, matroid, rng)


def run_shard(matroid: Matroid, x, trials: int, seed, chunk: int = CHUNK):
    """Counts for one shard: (times in R(x), times kept) per element."""
    x = as_point(x)
    rng = np.random.default_rng(seed)
    realized = np.zeros(x.n, dtype=np.int64)
    kept = np.zeros(x.n, dtype=np.int64)
    for start in range(0, trials, chunk):
        size = min(chunk, trials - start)
        R = rng.random((size, x.n)) < x.coords
        K = _resolve(matroid, R, x, rng)
        realized += R.sum(axis=0)
        kept += K.sum(axis=0)
    return realized, kept


def balancedness_counts(matroid: Matroid, x, cfg: TrialConfig, tol: float = DEFAULT_TOL):
    x = as_point(x)
    require_in_polytope(matroid, x, tol)
    parts = _map_shards(lambda t, s: run_shard(matroid, x, t, s), cfg)
    realized = sum(p[0] for p in parts)
    kept = sum(p[1] for p in parts)
    return realized, kept


def estimate_balancedness(matroid: Matroid, x, cfg: TrialConfig,
                          tol: float = DEFAULT_TOL) -> list:
    """Conditional keep frequency P[e kept | e in R(x)] for every e in supp(x).

    An element that never entered R(x) gets an estimate with
    ``trials_conditioned == 0`` and NaN fields.
    """
    x = as_point(x)
    realized, kept = balancedness_counts(matroid, x, cfg, tol)
    return [BalancednessEstimate.from_counts(e, int(kept[e]), int(realized[e]), cfg.z)
            for e in support(x)]


def estimate_marginal(x, A, k: int, cfg: TrialConfig) -> dict:
    """Empirical P[e kept] for each e in the fixed realized set ``A``."""
    x = as_point(x)
    members = list(A)
    if len(members) <= k:
        raise ValueError("estimate_marginal needs |A| > k")

    def shard(t, seed):
        rows = sample_subsets(x, members, k, t, np.random.default_rng(seed))
        return np.bincount(rows.ravel(), minlength=x.n)

    counts = sum(_map_shards(shard, cfg))
    return {e: counts[e] / cfg.trials for e in members}


def chi_square_critical(dof: int, significance: float = 1e-3) -> float:
    """Upper critical value of chi-square via the Wilson-Hilferty cube approximation."""
    if dof < 1:
        raise ValueError("dof must be positive")
    z = NormalDist().inv_cdf(1.0 - significance)
    t = 2.0 / (9.0 * dof)
    return dof * (1.0 - t + z * math.sqrt(t)) ** 3


class ChiSquareFit(NamedTuple):
    statistic: float
    dof: int
    passed: bool


def subset_counts(x, A, k: int, cfg: TrialConfig):
    """Empirical counts of each k-subset of ``A`` aligned with the enumerated table."""
    dist = enumerate_distribution(x, A if isinstance(A, ElementSet) else ElementSet(A, as_point(x).ground), k)
    masks = dist.masks()
    order = np.argsort(masks)

    def shard(t, seed):
        rows = sample_subsets(x, dist.base.members, k, t, np.random.default_rng(seed))
        drawn = (np.int64(1) << rows.astype(np.int64)).sum(axis=1)
        pos = np.searchsorted(masks[order], drawn)
        return np.bincount(order[pos], minlength=len(dist))

    return dist, sum(_map_shards(shard, cfg))


def chi_square_fit(x, A, k: int, cfg: TrialConfig, significance: float = 1e-3) -> ChiSquareFit:
    """Pearson test of the sampler's k-subset frequencies against the exact table.

    Zero-probability subsets are excluded from the statistic; drawing one
    makes the statistic infinite.
    """
    dist, observed = subset_counts(x, A, k, cfg)
    expected = dist.probabilities * cfg.trials
    live = dist.probabilities > 0
    if np.any(expected[live] < 5):
        raise ValueError("expected count below 5 in some cell; increase trials")
    if np.any(observed[~live] > 0):
        return ChiSquareFit(float("inf"), int(live.sum()) - 1, False)
    dof = int(live.sum()) - 1
    if dof < 1:
        return ChiSquareFit(0.0, 0, True)
    stat = float(np.sum((observed[live] - expected[live]) ** 2 / expected[live]))
    return ChiSquareFit(stat, dof, stat < chi_square_critical(dof, significance))


def marginal_difference(x, A, e: int, f: int, k: int) -> float:
    """P[e kept from A] - P[e kept from A + f]."""
    members = list(A)
    return marginal(x, members, e, k) - marginal(x, members + [f], e, k)


@dataclass
class MonotonicityReport:
    samples: int
    violations: int
    min_difference: float
    worst: tuple | None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def monotonicity_probe(x, k: int, samples: int, rng: np.random.Generator,
                       threshold: float = -1e-12) -> MonotonicityReport:
    """Random chains e in A, A + f inside supp(x); counts differences below ``threshold``."""
    x = as_point(x)
    supp = np.asarray(support(x).members)
    if supp.size < 2:
        return MonotonicityReport(0, 0, float("inf"), None)
    violations, lowest, worst = 0, float("inf"), None
    for _ in range(samples):
        size = int(rng.integers(1, supp.size))
        perm = rng.permutation(supp)
        A, f = perm[:size].tolist(), int(perm[size])
        e = A[int(rng.integers(size))]
        d = marginal_difference(x, A, e, f, k)
        if d < lowest:
            lowest, worst = d, (tuple(sorted(A)), e, f)
        if d < threshold:
            violations += 1
    return MonotonicityReport(samples, violations, lowest, worst)
