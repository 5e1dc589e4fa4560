"""Named verification suites behind ``crround verify``.

Each suite returns result rows of the form
``{"check", "measured", "tolerance", "pass", ...}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .exact import (
    AnalysisContext,
    alpha_inequality_check,
    check_h_gradient,
    expected_rank,
    fd_hessian,
    g_value,
    g_values,
    grid_maximize,
    h_value,
    h_value_recursive,
    h_values,
    hessian_at_center,
    hessian_scale,
    level_probabilities,
    optimality_bound,
    polytope_filter,
)
from .matroids import FractionalPoint, PartitionMatroid, UniformMatroid
from .montecarlo import (
    TrialConfig,
    chi_square_critical,
    chi_square_fit,
    estimate_balancedness,
    marginal_difference,
    monotonicity_probe,
    random_polytope_point,
    random_tight_point,
)
from .scheme import (
    balancedness_c,
    balancedness_limit,
    element_balancedness,
    marginal,
    partition_balancedness,
    q_table,
    symmetric_point,
)


@dataclass
class SuiteOptions:
    n: Optional[int] = None
    k: Optional[int] = None
    seed: int = 0
    instances: Optional[int] = None
    max_size: Optional[int] = None
    samples: Optional[int] = None
    trials: Optional[int] = None
    resolution: int = 60
    n_max: Optional[int] = None
    partition: str = "2:1,3:1,4:2"
    shards: int = 1
    tol_exact: float = 1e-9
    tol_recursion: float = 1e-10
    tol_max: float = 1e-6
    tol_sigma: float = 4.0
    tol_grad: float = 1e-6
    tol_hess: float = 1e-4
    tol_monotone: float = 1e-12
    tol_polytope: float = 1e-9


def row(check: str, measured, tolerance, passed: bool, **extra) -> dict:
    r = {"check": check, "measured": measured, "tolerance": tolerance, "pass": bool(passed)}
    r.update(extra)
    return r


def _nk(opts: SuiteOptions, n: int, k: int):
    return (opts.n if opts.n is not None else n), (opts.k if opts.k is not None else k)


def distribution(opts: SuiteOptions) -> list:
    rng = np.random.default_rng(opts.seed)
    count, max_size = opts.instances or 500, opts.max_size or 16
    lowest, worst = math.inf, 0.0
    for _ in range(count):
        m = int(rng.integers(2, max_size + 1))
        k = int(rng.integers(1, m))
        _, w = q_table(rng.random(m), k)
        lowest = min(lowest, float(w.min()))
        worst = max(worst, abs(float(w.sum()) - 1.0))
    return [row("min q-weight", lowest, 0.0, lowest >= 0, instances=count),
            row("max |sum q - 1|", worst, opts.tol_exact, worst <= opts.tol_exact, instances=count)]


def marginals(opts: SuiteOptions) -> list:
    rng = np.random.default_rng(opts.seed)
    count, max_size = opts.instances or 500, opts.max_size or 16
    worst = 0.0
    for _ in range(count):
        m = int(rng.integers(2, max_size + 1))
        k = int(rng.integers(1, m))
        xs = rng.random(m)
        e = int(rng.integers(m))
        pos, w = q_table(xs, k)
        enumerated = float(w[(pos == e).any(axis=1)].sum())
        worst = max(worst, abs(marginal(xs, range(m), e, k) - enumerated))
    return [row("max |closed-form marginal - enumerated|", worst, opts.tol_exact,
                worst <= opts.tol_exact, instances=count)]


def recursion(opts: SuiteOptions) -> list:
    rng = np.random.default_rng(opts.seed)
    count, max_size = opts.instances or 1000, opts.max_size or 14
    worst = worst_dual = 0.0
    for _ in range(count):
        m = int(rng.integers(1, max_size + 1))
        k = opts.k if opts.k is not None else int(rng.integers(0, m + 2))
        xs = rng.random(m)
        S = range(m)
        worst = max(worst, abs(h_value(xs, S, k) - h_value_recursive(xs, S, k)))
        if 0 <= k <= m + 1:
            worst_dual = max(worst_dual, abs(h_value(xs, S, k) - h_value(1 - xs, S, m + 1 - k)))
    tol = opts.tol_recursion
    return [row("max |h enumerated - h recursive|", worst, tol, worst <= tol, instances=count),
            row("max |h^k(x) - h^(n-k)(1-x)|", worst_dual, tol, worst_dual <= tol, instances=count)]


def maximum(opts: SuiteOptions) -> list:
    n, k = _nk(opts, 4, 2)
    ctx = AnalysisContext(n, k, 0)
    point, value = grid_maximize(lambda P: g_values(ctx, P), n, opts.resolution, snap=n,
                                 feasible=polytope_filter(k), symmetric_axes=range(1, n))
    target = 1 - balancedness_c(k, n)
    at_center = g_value(ctx, FractionalPoint.constant(n, k / n))
    offset = float(np.max(np.abs(point - k / n)))
    return [
        row("argmax distance from k/n", offset, 1e-12, offset <= 1e-12, argmax=point),
        row("|grid max - (1 - c(k,n))|", abs(value - target), opts.tol_max,
            abs(value - target) <= opts.tol_max, grid_max=value, expected=target),
        row("grid max - G(k/n)", value - at_center, opts.tol_exact, value - at_center <= opts.tol_exact),
    ]


def xe_equality(opts: SuiteOptions) -> list:
    n, k = _nk(opts, 4, 2)
    ctx = AnalysisContext(n, k, 0)
    S = list(ctx.S)
    rng = np.random.default_rng(opts.seed)
    count = opts.instances or 200
    worst_eq = worst_ineq = 0.0
    for _ in range(count):
        xs = rng.random(n - 1)
        if xs.sum() > k:
            xs *= k / xs.sum()
        full = np.empty(n)
        full[S] = xs
        full[ctx.e] = k - xs.sum()
        bound = float(h_values(xs[None, :], k)[0]) / k
        worst_eq = max(worst_eq, abs(float(g_values(ctx, full[None, :])[0]) - bound))
        y = random_polytope_point(UniformMatroid(n, k), rng)
        worst_ineq = max(worst_ineq, g_value(ctx, y) - h_value(y, S, k) / k)
    tol = opts.tol_exact
    return [row("max |G - h/k| at x_e = k - x(S)", worst_eq, tol, worst_eq <= tol, instances=count),
            row("max (G - h/k) on the polytope", worst_ineq, tol, worst_ineq <= tol, instances=count)]


def optimality(opts: SuiteOptions) -> list:
    n_max = opts.n_max or 12
    tol = opts.tol_exact
    worst = 0.0
    for n in range(2, n_max + 1):
        for k in range(1, n):
            worst = max(worst, abs(optimality_bound(k, n) * k - k * balancedness_c(k, n)))
    rng = np.random.default_rng(opts.seed)
    count = opts.instances or 200
    worst_id = worst_gen = 0.0
    for _ in range(count):
        n = int(rng.integers(2, n_max + 1))
        k = int(rng.integers(1, n))
        U = UniformMatroid(n, k)
        # k - h equals the expected rank only where the rank constraint is tight
        x = random_tight_point(n, k, rng)
        worst_id = max(worst_id, abs(expected_rank(U, x) + h_value(x, range(n), k) - k))
        y = FractionalPoint(rng.random(n))
        q = level_probabilities(y, range(n))
        via_levels = k - sum((k - i) * q[i] for i in range(k))
        worst_gen = max(worst_gen, abs(expected_rank(U, y) - via_levels))
    return [row("max |E[rank] - k c(k,n)| at k/n", worst, tol, worst <= tol, n_max=n_max),
            row("max |E[rank] + h - k| on x(N) = k", worst_id, tol, worst_id <= tol, instances=count),
            row("max |E[rank] - (k - sum (k-i) Q^i)|", worst_gen, tol, worst_gen <= tol, instances=count)]


def monotonicity(opts: SuiteOptions) -> list:
    rng = np.random.default_rng(opts.seed)
    samples = opts.samples or 10**5
    per_point = 100
    violations, lowest = 0, math.inf
    done = 0
    while done < samples:
        n = int(rng.integers(2, 13))
        k = int(rng.integers(1, n))
        x = random_polytope_point(UniformMatroid(n, k), rng)
        rep = monotonicity_probe(x, k, min(per_point, samples - done), rng, -opts.tol_monotone)
        violations += rep.violations
        lowest = min(lowest, rep.min_difference)
        done += min(per_point, samples - done)
    tight = max(abs(marginal_difference([0.3, 0.0, 0.0, 0.7], [0, 1, 2], 0, 3, 1)),
                abs(marginal_difference([1.0, 0.0, 0.0, 1.0], [0, 1, 2], 0, 3, 2)))
    return [row("violations below -tol", violations, opts.tol_monotone, violations == 0,
                samples=samples, min_difference=lowest),
            row("|difference| in the tight case", tight, opts.tol_monotone, tight <= opts.tol_monotone)]


def hessian(opts: SuiteOptions) -> list:
    n, k = _nk(opts, 6, 2)
    H = hessian_at_center(k, n)
    c = hessian_scale(k, n)
    eig = np.sort(np.linalg.eigvalsh(-H / c))
    expected = np.array([1.0] * (n - 2) + [float(n)])
    rel = float(np.max(np.abs(eig - expected) / expected))
    rows = [row("eigenvalues of -H/c vs {1, n}", rel, opts.tol_exact, rel <= opts.tol_exact,
                eigenvalues=eig),
            row("largest eigenvalue of H", float(np.linalg.eigvalsh(H).max()), 0.0,
                np.linalg.eigvalsh(H).max() < 0)]
    if n <= 8:
        S = list(range(n - 1))
        fd = fd_hessian(lambda v: float(h_values(v[None, :], k)[0]), np.full(n - 1, k / n))
        diff = float(np.max(np.abs(fd - H)))
        rows.append(row("max |H - finite-difference Hessian|", diff, opts.tol_hess, diff <= opts.tol_hess,
                        size=len(S)))
    return rows


def gradient(opts: SuiteOptions) -> list:
    rng = np.random.default_rng(opts.seed)
    count, max_size = opts.instances or 200, opts.max_size or 12
    worst = 0.0
    for _ in range(count):
        m = int(rng.integers(1, max_size + 1))
        k = int(rng.integers(1, m + 1))
        xs = 0.05 + 0.9 * rng.random(m)
        worst = max(worst, check_h_gradient(xs, range(m), k).max_abs_diff)
    return [row("max |closed-form gradient - finite differences|", worst, opts.tol_grad,
                worst <= opts.tol_grad, instances=count)]


def alpha_monotone(opts: SuiteOptions) -> list:
    rep = alpha_inequality_check(opts.n_max or 200)
    return [row("alpha inequality violations", len(rep.violations), 0, rep.passed,
                n_max=rep.n_max, checked=rep.checked)]


def _keep_rows(matroid, x, cfg: TrialConfig, z: float) -> list:
    rows = []
    for est in estimate_balancedness(matroid, x, cfg):
        bound = element_balancedness(matroid, est.element)
        dev = abs(est.conditional_keep - bound)
        rows.append(row(f"element {est.element} keep rate vs its c", dev, z * est.std_error,
                        dev <= z * est.std_error, estimate=est.conditional_keep, c=bound,
                        trials_conditioned=est.trials_conditioned))
    return rows


def partition(opts: SuiteOptions) -> list:
    matroid = PartitionMatroid.from_spec(opts.partition)
    cfg = TrialConfig(opts.trials or 10**6, opts.seed, opts.tol_sigma, opts.shards)
    rows = _keep_rows(matroid, symmetric_point(matroid), cfg, opts.tol_sigma)
    block_cs = [balancedness_c(d, len(b)) if 0 < d < len(b) else 1.0
                for b, d in zip(matroid.blocks, matroid.capacities)]
    reported = partition_balancedness(matroid)
    rows.append(row("reported balancedness - min block c", abs(reported - min(block_cs)), 0.0,
                    reported == min(block_cs), balancedness=reported))
    return rows


def balancedness(opts: SuiteOptions) -> list:
    n, k = _nk(opts, 5, 2)
    matroid = UniformMatroid(n, k)
    cfg = TrialConfig(opts.trials or 10**6, opts.seed, opts.tol_sigma, opts.shards)
    return _keep_rows(matroid, symmetric_point(matroid), cfg, opts.tol_sigma)


def limit(opts: SuiteOptions) -> list:
    big = 10**6
    rows = []
    for k in range(1, 10):
        gap = balancedness_c(k, big) - balancedness_limit(k)
        rows.append(row(f"c({k},10^6) - limit", gap, 1e-5, 0 < gap < 1e-5))
    return rows


def sampler_fit(opts: SuiteOptions) -> list:
    n, k = _nk(opts, 5, 2)
    rng = np.random.default_rng(opts.seed)
    x = random_polytope_point(UniformMatroid(n, k), rng)
    cfg = TrialConfig(opts.trials or 10**6, opts.seed, opts.tol_sigma, opts.shards)
    fit = chi_square_fit(x, range(n), k, cfg)
    crit = chi_square_critical(fit.dof) if fit.dof else 0.0
    return [row("chi-square statistic", fit.statistic, crit, fit.passed, dof=fit.dof, x=x.coords)]


SUITES: dict[str, Callable[[SuiteOptions], list]] = {
    "distribution": distribution,
    "marginals": marginals,
    "recursion": recursion,
    "maximum": maximum,
    "xe-equality": xe_equality,
    "optimality": optimality,
    "monotonicity": monotonicity,
    "hessian": hessian,
    "gradient": gradient,
    "alpha-monotone": alpha_monotone,
    "partition": partition,
    "balancedness": balancedness,
    "limit": limit,
    "sampler-fit": sampler_fit,
}

# names used in the external interface contract
ALIASES = {
    "lemma2.2": "distribution",
    "lemma2.3": "marginals",
    "lemma2.7": "recursion",
    "thm2.5": "maximum",
    "lemma2.6-equality": "xe-equality",
    "thm2.9": "optimality",
    "thm2.10": "monotonicity",
}


def resolve_suite(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in SUITES and name != "all":
        raise KeyError(name)
    return name


def run_suite(name: str, opts: SuiteOptions) -> list:
    name = resolve_suite(name)
    if name == "all":
        rows = []
        for key, fn in SUITES.items():
            rows.extend(dict(r, suite=key) for r in fn(replace(opts)))
        return rows
    return [dict(r, suite=name) for r in SUITES[name](opts)]
