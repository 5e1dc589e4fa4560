import itertools
import math

import numpy as np
import pytest

from crround.exact import (
    AnalysisContext,
    alpha_inequality_check,
    check_h_gradient,
    expected_rank,
    fd_hessian,
    g_value,
    g_values,
    g_via_simulation_consistency,
    grid_maximize,
    h_gradient,
    h_value,
    h_value_recursive,
    h_values,
    hessian_at_center,
    hessian_scale,
    level_probabilities,
    optimality_bound,
    p_weight,
    polytope_filter,
    q_level,
    subset_tables,
)
from crround.matroids import FractionalPoint, UniformMatroid
from crround.scheme import alpha, balancedness_c, q_weight


def brute_h(xs, k):
    m = len(xs)
    total = 0.0
    for A in itertools.combinations(range(m), k):
        p = np.prod([xs[i] if i in A else 1 - xs[i] for i in range(m)])
        total += p * (k - sum(xs[i] for i in A))
    return total


def brute_g(xs, e, k):
    """Drop probability of e, straight from the definition with q_weight."""
    n = len(xs)
    S = [i for i in range(n) if i != e]
    total = 0.0
    for size in range(k, len(S) + 1):
        for A in itertools.combinations(S, size):
            p = np.prod([xs[i] if i in A else 1 - xs[i] for i in S])
            full = list(A) + [e]
            total += p * sum(q_weight(xs, full, B) for B in itertools.combinations(A, k))
    return total


def test_context_bounds():
    with pytest.raises(ValueError):
        AnalysisContext(25, 2)
    with pytest.raises(ValueError):
        AnalysisContext(4, 4)
    with pytest.raises(ValueError):
        AnalysisContext(4, 2, e=4)
    assert AnalysisContext(4, 2, e=1).S.members == (0, 2, 3)


def test_subset_tables_masks():
    p, s, pop = subset_tables(np.array([[0.2, 0.5, 0.9]]))
    assert p.shape == (1, 8)
    assert p.sum() == pytest.approx(1)
    assert s[0, 0b101] == pytest.approx(1.1)
    assert pop.tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


def test_p_weight_examples():
    assert p_weight([0.5] * 4, range(4), [0, 2]) == pytest.approx(1 / 16)
    assert p_weight([1.0] * 3, range(3), range(3)) == 1.0
    rng = np.random.default_rng(0)
    x = rng.random(5)
    total = sum(p_weight(x, range(5), A) for r in range(6) for A in itertools.combinations(range(5), r))
    assert total == pytest.approx(1.0)
    with pytest.raises(ValueError):
        p_weight(x, [0, 1], [2])


def test_q_level_examples():
    assert q_level([0.5, 0.5], [0, 1], 1) == pytest.approx(0.5)
    assert q_level([1.0, 1.0, 1.0], range(3), 3) == 1.0
    assert q_level([1 / 3] * 3, range(3), 0) == pytest.approx(8 / 27)
    assert level_probabilities(np.random.default_rng(1).random(7), range(7)).sum() == pytest.approx(1)
    with pytest.raises(ValueError):
        q_level([0.5, 0.5], [0, 1], 3)


def test_h_examples():
    for t in [0.0, 0.3, 0.5, 0.8]:
        assert h_value([t], [0], 1) == pytest.approx(t * (1 - t))
    assert h_value([0.5], [0], 1) == pytest.approx(0.25)
    for k, n in [(1, 3), (2, 3), (2, 5), (3, 7)]:
        assert h_value([k / n] * (n - 1), range(n - 1), k) == pytest.approx(alpha(k, n), abs=1e-12)
    assert h_value([0.4, 0.4], [0, 1], 0) == 0.0
    assert h_value([0.4, 0.4], [0, 1], 3) == 0.0


def test_h_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(30):
        m = int(rng.integers(1, 8))
        k = int(rng.integers(1, m + 1))
        xs = rng.random(m)
        assert h_value(xs, range(m), k) == pytest.approx(brute_h(xs, k), abs=1e-12)


def test_h_duality():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = int(rng.integers(1, 10))
        n = m + 1
        k = int(rng.integers(0, n + 1))
        xs = rng.random(m)
        assert h_value(xs, range(m), k) == pytest.approx(h_value(1 - xs, range(m), n - k), abs=1e-12)


def test_h_recursion():
    assert h_value_recursive([0.3, 0.6], [0, 1], 1) == pytest.approx(0.7 * 0.4 * 0.9)
    rng = np.random.default_rng(4)
    for _ in range(200):
        m = int(rng.integers(1, 12))
        k = int(rng.integers(0, m + 2))
        xs = rng.random(m)
        assert abs(h_value(xs, range(m), k) - h_value_recursive(xs, range(m), k)) <= 1e-10


def test_boundary_reductions():
    rng = np.random.default_rng(5)
    for _ in range(50):
        m = int(rng.integers(2, 9))
        k = int(rng.integers(1, m + 1))
        xs = rng.random(m)
        i = int(rng.integers(m))
        rest = [j for j in range(m) if j != i]
        xs[i] = 0.0
        assert h_value(xs, range(m), k) == pytest.approx(h_value(xs, rest, k), abs=1e-12)
        xs[i] = 1.0
        assert h_value(xs, range(m), k) == pytest.approx(h_value(xs, rest, k - 1), abs=1e-12)


def test_gradient():
    assert h_gradient([0.3], [0], 1) == pytest.approx([1 - 0.6])
    for k, n in [(1, 3), (2, 5), (4, 7)]:
        assert np.allclose(h_gradient([k / n] * (n - 1), range(n - 1), k), 0, atol=1e-15)
    rng = np.random.default_rng(6)
    for _ in range(40):
        m = int(rng.integers(1, 10))
        k = int(rng.integers(1, m + 1))
        rep = check_h_gradient(0.05 + 0.9 * rng.random(m), range(m), k)
        assert rep.analytic.shape == rep.numeric.shape == (m,)
        assert rep.max_abs_diff <= 1e-6
    with pytest.raises(ValueError):
        h_gradient([0.5, 0.5], [0, 1], 3)


def test_hessian():
    assert hessian_at_center(1, 2).tolist() == [[-2.0]]
    H = hessian_at_center(2, 6)
    c = hessian_scale(2, 6)
    assert np.allclose(np.sort(np.linalg.eigvalsh(-H / c)), [1, 1, 1, 1, 6])
    assert np.all(np.linalg.eigvalsh(H) < 0)
    fd = fd_hessian(lambda v: float(h_values(v[None, :], 2)[0]), np.full(5, 2 / 6))
    assert np.max(np.abs(fd - H)) <= 1e-4
    assert hessian_scale(60, 120) == pytest.approx(
        math.comb(118, 59) * 0.5 ** 59 * 0.5 ** 59, rel=1e-10)
    with pytest.raises(ValueError):
        hessian_at_center(3, 3)


def test_g_matches_definition():
    rng = np.random.default_rng(7)
    for n, k in [(3, 1), (4, 2), (5, 2), (5, 3)]:
        for e in range(n):
            xs = rng.random(n)
            xs *= min(1, k / xs.sum())
            assert g_value(AnalysisContext(n, k, e), xs) == pytest.approx(brute_g(xs, e, k), abs=1e-12)


def test_g_at_symmetric_point_chain():
    for n, k in [(3, 1), (4, 2), (5, 3), (8, 2), (9, 4)]:
        ctx = AnalysisContext(n, k)
        x = FractionalPoint.constant(n, k / n)
        g = g_value(ctx, x)
        assert g == pytest.approx(1 - balancedness_c(k, n), abs=1e-9)
        assert g == pytest.approx(h_value(x, ctx.S, k) / k, abs=1e-9)
        assert optimality_bound(k, n) == pytest.approx(balancedness_c(k, n), abs=1e-9)


def test_g_relabeling_invariance():
    rng = np.random.default_rng(8)
    n, k = 5, 2
    xs = rng.random(n) * 0.4
    perm = rng.permutation(n)
    for e in range(n):
        a = g_value(AnalysisContext(n, k, e), xs)
        b = g_value(AnalysisContext(n, k, int(np.flatnonzero(perm == e)[0])), xs[perm])
        assert a == pytest.approx(b, abs=1e-13)


def test_g_with_only_e_positive():
    assert g_value(AnalysisContext(4, 1), [0.7, 0, 0, 0]) == 0.0


def test_g_against_simulation():
    rng = np.random.default_rng(9)
    ctx = AnalysisContext(5, 2, 1)
    x = FractionalPoint([0.3, 0.5, 0.2, 0.6, 0.4])
    g = g_value(ctx, x)
    trials = 200000
    est = g_via_simulation_consistency(ctx, x, trials, rng)
    assert abs(est - g) <= 4 * math.sqrt(g * (1 - g) / trials)
    assert g_via_simulation_consistency(AnalysisContext(4, 2), [1, 1, 0, 0], 1000, rng) == 0.0
    with pytest.raises(ValueError):
        g_via_simulation_consistency(ctx, [0.3, 0.0, 0.2, 0.6, 0.4], 10, rng)


def test_expected_rank():
    U = UniformMatroid(6, 2)
    assert expected_rank(U, [1.0] * 6) == 2
    assert expected_rank(U, [0.0] * 6) == 0
    for n in range(2, 9):
        for k in range(1, n):
            x = FractionalPoint.constant(n, k / n)
            assert expected_rank(UniformMatroid(n, k), x) == pytest.approx(k * balancedness_c(k, n), abs=1e-9)
            assert expected_rank(UniformMatroid(n, k), x) + h_value(x, range(n), k) == pytest.approx(k, abs=1e-9)


def test_rank_identity_needs_a_tight_point():
    # away from x(N) = k the two sides differ by sum_{i<k} Q^i (x(N) - k)
    x = FractionalPoint([0.1, 0.2, 0.1])
    gap = expected_rank(UniformMatroid(3, 2), x) + h_value(x, range(3), 2) - 2
    q = level_probabilities(x, range(3))
    assert gap == pytest.approx((q[0] + q[1]) * (0.4 - 2))
    assert abs(gap) > 1


def test_optimality_bound_examples():
    assert optimality_bound(1, 2) == pytest.approx(0.75)
    for n in [2, 5, 11]:
        assert optimality_bound(1, n) == pytest.approx(1 - (1 - 1 / n) ** n)


def test_alpha_inequalities():
    assert alpha(1, 3) > alpha(1, 2)
    rep = alpha_inequality_check(200)
    assert rep.passed
    assert rep.checked == 2 * sum(n - 1 for n in range(2, 201))
    with pytest.raises(ValueError):
        alpha_inequality_check(1)


def _h_on(k):
    return lambda P: h_values(P, k)


def test_grid_h_landscape():
    point, value = grid_maximize(_h_on(1), 2, 300, snap=3)
    assert np.allclose(point, [1 / 3, 1 / 3])
    assert value == pytest.approx(alpha(1, 3), abs=1e-12)
    point, value = grid_maximize(_h_on(2), 2, 300, snap=3)
    assert np.allclose(point, [2 / 3, 2 / 3])
    assert value == pytest.approx(alpha(2, 3), abs=1e-12)


def test_grid_snaps_resolution():
    point, _ = grid_maximize(_h_on(1), 2, 10, snap=3)
    assert np.allclose(point, [1 / 3, 1 / 3])


def test_symmetric_grid_equals_full_grid():
    ctx = AnalysisContext(4, 2)
    f = lambda P: g_values(ctx, P)
    full = grid_maximize(f, 4, 12, snap=4, feasible=polytope_filter(2))
    reduced = grid_maximize(f, 4, 12, snap=4, feasible=polytope_filter(2), symmetric_axes=[1, 2, 3])
    assert full[1] == pytest.approx(reduced[1], abs=1e-15)
    assert np.allclose(reduced[0], 0.5)
    assert full[1] == pytest.approx(1 - balancedness_c(2, 4), abs=1e-12)


def test_grid_dimension_cap():
    with pytest.raises(ValueError):
        grid_maximize(_h_on(1), 6, 4)
