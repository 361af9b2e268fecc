"""Tests for the strictly lower triangular matrix-equation solvers.

Oracle routes, written before the implementations they check:
  * assemble_commutator_operator builds the n(n-1)/2 square matrix of
    the map L -> stril(T L - L T) directly from the index formula
    (coefficient of l[p,q] in equation (i,j)), with no matrix products.
    Solving that dense system with numpy gives an independent L.
  * The Sylvester oracle vectorizes T22 X - X T11 = C with Kronecker
    products and solves the dense system.
  * The phi oracle runs numpy's SVD on the assembled operator matrix.
"""

import numpy as np
import pytest

from ddschur.trisolve import (
    DEFAULT_CLIP_THRESHOLD,
    NonFiniteError,
    SeparationError,
    TriEqProblem,
    TriEqSolution,
    phi_estimate,
    reset_stats,
    solve_block,
    solve_scalar,
    solve_sylvester_tri,
    stats,
)


def lower_pairs(n):
    return [(i, j) for j in range(n - 1) for i in range(j + 1, n)]


def assemble_commutator_operator(t):
    """Matrix of L -> stril(T L - L T) on strictly lower entries.

    Row (i, j), column (p, q): entry (i, j) of T L - L T picks up
    t[i, p] * l[p, j] from the first product whenever q == j, and
    -l[i, q] * t[q, j] from the second whenever p == i.
    """
    n = t.shape[0]
    pairs = lower_pairs(n)
    index = {pq: k for k, pq in enumerate(pairs)}
    op = np.zeros((len(pairs), len(pairs)), dtype=complex)
    for (i, j), row in index.items():
        for (p, q), col in index.items():
            val = 0.0 + 0.0j
            if q == j:
                val += t[i, p]
            if p == i:
                val -= t[q, j]
            op[row, col] = val
    return op


def solve_dense_oracle(t, e):
    """Solve stril(T L - L T) = -E through the dense operator matrix."""
    n = t.shape[0]
    pairs = lower_pairs(n)
    op = assemble_commutator_operator(t)
    rhs = np.array([-e[i, j] for (i, j) in pairs])
    sol = np.linalg.solve(op, rhs)
    l = np.zeros((n, n), dtype=complex)
    for k, (i, j) in enumerate(pairs):
        l[i, j] = sol[k]
    return l


def sylvester_kron_oracle(t22, t11, c):
    """Solve T22 X - X T11 = C via Kronecker vectorization."""
    m = t22.shape[0]
    p = t11.shape[0]
    big = np.kron(np.eye(p), t22) - np.kron(t11.T, np.eye(m))
    vec = np.linalg.solve(big, c.reshape(-1, order="F"))
    return vec.reshape((m, p), order="F")


def phi_svd_oracle(t):
    op = assemble_commutator_operator(t)
    return float(np.linalg.svd(op, compute_uv=False)[-1])


def random_upper(rng, n, diag_sep=1.0, scale=1.0):
    """Random complex upper triangular with diagonal gaps >= diag_sep."""
    t = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    t = np.triu(t)
    spread = np.cumsum(diag_sep + rng.uniform(0.0, 1.0, size=n))
    phases = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=n))
    t[np.arange(n), np.arange(n)] = spread * phases
    return t


def random_strict_lower(rng, n, scale=1.0):
    e = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return np.tril(e, -1)


def residual_norm(t, e, l):
    r = np.tril(t @ l - l @ t, -1) + e
    return np.linalg.norm(r)


def test_zero_rhs_gives_zero_solution():
    rng = np.random.default_rng(0)
    t = random_upper(rng, 7)
    sol = solve_scalar(TriEqProblem(t=t, e=np.zeros((7, 7), dtype=complex)))
    assert np.array_equal(sol.l, np.zeros((7, 7), dtype=complex))
    assert sol.clipped_count == 0


def test_two_by_two_entry_formula():
    t = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
    e = np.array([[0.0, 0.0], [0.5, 0.0]], dtype=complex)
    sol = solve_scalar(TriEqProblem(t=t, e=e))
    assert sol.l[1, 0] == -0.5
    assert sol.l[0, 0] == 0 and sol.l[0, 1] == 0 and sol.l[1, 1] == 0


def test_scalar_matches_dense_oracle_integer_instance():
    rng = np.random.default_rng(42)
    n = 6
    t = np.triu(rng.integers(-3, 4, size=(n, n)).astype(complex))
    t[np.arange(n), np.arange(n)] = np.arange(1, n + 1, dtype=float)
    e = np.tril(rng.integers(-5, 6, size=(n, n)).astype(complex), -1)
    sol = solve_scalar(TriEqProblem(t=t, e=e))
    expected = solve_dense_oracle(t, e)
    assert np.max(np.abs(sol.l - expected)) <= 1e-10


def test_scalar_matches_dense_oracle_random():
    rng = np.random.default_rng(7)
    for n in (3, 8, 12):
        for _ in range(3):
            t = random_upper(rng, n, diag_sep=0.5)
            e = random_strict_lower(rng, n)
            sol = solve_scalar(TriEqProblem(t=t, e=e))
            expected = solve_dense_oracle(t, e)
            scale = max(1.0, np.linalg.norm(expected))
            assert np.linalg.norm(sol.l - expected) <= 1e-10 * scale


def test_sylvester_matches_kronecker_oracle():
    rng = np.random.default_rng(11)
    t22 = random_upper(rng, 5, diag_sep=0.5)
    t11 = random_upper(rng, 3, diag_sep=0.5) + 40.0 * np.eye(3)
    c = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    x = solve_sylvester_tri(t22, t11, c)
    expected = sylvester_kron_oracle(t22, t11, c)
    scale = max(1.0, np.linalg.norm(expected))
    assert np.linalg.norm(x - expected) <= 1e-10 * scale


def test_sylvester_trivial_cases():
    t22 = np.array([[3.0]], dtype=complex)
    t11 = np.array([[1.0]], dtype=complex)
    c = np.array([[4.0]], dtype=complex)
    x = solve_sylvester_tri(t22, t11, c)
    assert x[0, 0] == 2.0
    z = solve_sylvester_tri(t22, t11, np.zeros((1, 1), dtype=complex))
    assert x.shape == z.shape and z[0, 0] == 0.0


def test_sylvester_validation():
    good = np.eye(2, dtype=complex)
    bad = np.array([[1.0, 0.0], [1.0, 2.0]], dtype=complex)
    c = np.zeros((2, 2), dtype=complex)
    with pytest.raises(ValueError):
        solve_sylvester_tri(bad, good, c)
    with pytest.raises(ValueError):
        solve_sylvester_tri(good, good, np.zeros((3, 2), dtype=complex))


def test_block_matches_scalar_16():
    rng = np.random.default_rng(5)
    n = 16
    t = random_upper(rng, n, diag_sep=0.5)
    e = random_strict_lower(rng, n)
    a = solve_scalar(TriEqProblem(t=t, e=e))
    b = solve_block(TriEqProblem(t=t, e=e), n_min=4)
    scale = max(1.0, np.linalg.norm(a.l))
    assert np.linalg.norm(a.l - b.l) <= 1e-11 * scale
    assert residual_norm(t, e, b.l) <= 1e-10 * scale * np.linalg.norm(t)


def test_block_three_by_three_split_hand_formulas():
    # n_min=2 forces a split at n1=1; compare with the entry recurrences
    rng = np.random.default_rng(13)
    t = random_upper(rng, 3, diag_sep=0.7)
    e = random_strict_lower(rng, 3)
    sol = solve_block(TriEqProblem(t=t, e=e), n_min=2)
    l31 = -e[2, 0] / (t[2, 2] - t[0, 0])
    l21 = -(e[1, 0] + t[1, 2] * l31) / (t[1, 1] - t[0, 0])
    l32 = -(e[2, 1] - l31 * t[0, 1]) / (t[2, 2] - t[1, 1])
    assert abs(sol.l[2, 0] - l31) <= 1e-12 * max(1.0, abs(l31))
    assert abs(sol.l[1, 0] - l21) <= 1e-12 * max(1.0, abs(l21))
    assert abs(sol.l[2, 1] - l32) <= 1e-12 * max(1.0, abs(l32))


def test_block_at_or_below_nmin_is_bitwise_scalar():
    rng = np.random.default_rng(21)
    t = random_upper(rng, 4)
    e = random_strict_lower(rng, 4)
    a = solve_scalar(TriEqProblem(t=t, e=e))
    b = solve_block(TriEqProblem(t=t, e=e), n_min=4)
    assert np.array_equal(a.l, b.l)


def test_block_nmin_validation():
    t = np.eye(2, dtype=complex)
    t[1, 1] = 2.0
    e = np.zeros((2, 2), dtype=complex)
    with pytest.raises(ValueError):
        solve_block(TriEqProblem(t=t, e=e), n_min=1)


def test_problem_validation():
    t = np.eye(3, dtype=complex)
    t[np.arange(3), np.arange(3)] = [1.0, 2.0, 3.0]
    e = np.zeros((3, 3), dtype=complex)
    bad_t = t.copy()
    bad_t[2, 0] = 1e-30
    with pytest.raises(ValueError):
        solve_scalar(TriEqProblem(t=bad_t, e=e))
    bad_e = e.copy()
    bad_e[0, 2] = 1.0
    with pytest.raises(ValueError):
        solve_scalar(TriEqProblem(t=t, e=bad_e))
    with pytest.raises(ValueError):
        solve_scalar(TriEqProblem(t=t, e=np.zeros((2, 2), dtype=complex)))
    with pytest.raises(ValueError):
        solve_scalar(TriEqProblem(t=t, e=e, clip_threshold=0.0))


def test_residual_bound_well_separated():
    rng = np.random.default_rng(31)
    for n in (6, 10):
        for _ in range(3):
            t = random_upper(rng, n, diag_sep=0.1)
            e = random_strict_lower(rng, n)
            for solver in (solve_scalar, lambda p: solve_block(p, n_min=4)):
                sol = solver(TriEqProblem(t=t, e=e))
                bound = 1e-10 * (
                    np.linalg.norm(t) * max(1.0, np.linalg.norm(sol.l))
                    + np.linalg.norm(e)
                )
                assert residual_norm(t, e, sol.l) <= bound


def test_solution_is_linear_in_rhs():
    rng = np.random.default_rng(17)
    n = 8
    t = random_upper(rng, n, diag_sep=0.5)
    e1 = random_strict_lower(rng, n)
    e2 = random_strict_lower(rng, n)
    alpha, beta = 0.7 - 0.2j, -1.3 + 0.4j
    la = solve_scalar(TriEqProblem(t=t, e=alpha * e1 + beta * e2)).l
    l1 = solve_scalar(TriEqProblem(t=t, e=e1)).l
    l2 = solve_scalar(TriEqProblem(t=t, e=e2)).l
    combo = alpha * l1 + beta * l2
    scale = max(1.0, np.linalg.norm(combo))
    assert np.linalg.norm(la - combo) <= 1e-12 * scale


def test_separation_error_on_exact_duplicate():
    t = np.diag([1.0, 2.0, 1.0]).astype(complex)
    t[0, 1] = 0.5
    e = np.zeros((3, 3), dtype=complex)
    e[1, 0] = 1.0
    with pytest.raises(SeparationError):
        solve_scalar(TriEqProblem(t=t, e=e))
    with pytest.raises(SeparationError):
        solve_block(TriEqProblem(t=t, e=e), n_min=2)
    with pytest.raises(SeparationError):
        solve_sylvester_tri(
            np.array([[1.0]], dtype=complex),
            np.array([[1.0]], dtype=complex),
            np.array([[1.0]], dtype=complex),
        )


def test_near_zero_separation_is_not_an_error():
    t = np.diag([0.0, 1e-200]).astype(complex)
    e = np.zeros((2, 2), dtype=complex)
    e[1, 0] = 1.0
    sol = solve_scalar(TriEqProblem(t=t, e=e))
    assert sol.l[1, 0] == -1e200


def test_nonfinite_error_on_overflow():
    t = np.diag([0.0, 1e-200, 2e-200]).astype(complex)
    t[0, 1] = t[0, 2] = t[1, 2] = 1.0
    e = np.tril(np.ones((3, 3)), -1).astype(complex)
    with pytest.raises(NonFiniteError):
        solve_scalar(TriEqProblem(t=t, e=e))
    t22 = np.array([[2e-300, 1.0], [0.0, 1e-300]], dtype=complex)
    t11 = np.zeros((1, 1), dtype=complex)
    c = np.ones((2, 1), dtype=complex)
    with pytest.raises(NonFiniteError):
        solve_sylvester_tri(t22, t11, c)


def test_clipping_zeroes_and_counts():
    rng = np.random.default_rng(3)
    n = 5
    t = random_upper(rng, n, diag_sep=0.5)
    # shrink one gap so one entry blows past the threshold
    t[1, 1] = t[0, 0] + 1e-9
    e = random_strict_lower(rng, n)
    raw = solve_scalar(TriEqProblem(t=t, e=e))
    assert np.max(np.abs(raw.l)) > 1.0 / DEFAULT_CLIP_THRESHOLD
    assert raw.clipped_count == 0
    for solver in (solve_scalar, lambda p: solve_block(p, n_min=2)):
        sol = solver(
            TriEqProblem(t=t, e=e, clip_threshold=DEFAULT_CLIP_THRESHOLD)
        )
        assert sol.clipped_count >= 1
        assert np.max(np.abs(sol.l)) <= DEFAULT_CLIP_THRESHOLD
    clipped_entry = solve_scalar(
        TriEqProblem(t=t, e=e, clip_threshold=DEFAULT_CLIP_THRESHOLD)
    )
    assert clipped_entry.l[1, 0] == 0.0


def test_sylvester_clipping_bounds_entries():
    t22 = np.array([[1e-9, 0.0], [0.0, 2.0]], dtype=complex)
    t11 = np.zeros((1, 1), dtype=complex)
    c = np.ones((2, 1), dtype=complex)
    x = solve_sylvester_tri(t22, t11, c, clip_threshold=1e-5)
    assert np.max(np.abs(x)) <= 1e-5
    assert x[0, 0] == 0.0


def test_phi_trivial_values():
    assert phi_estimate(np.diag([0.0, 1.0]).astype(complex)) == 1.0
    assert phi_estimate(np.zeros((2, 2), dtype=complex)) == 0.0


def test_phi_matches_svd_oracle():
    rng = np.random.default_rng(19)
    for _ in range(10):
        t = random_upper(rng, 5, diag_sep=0.3)
        phi = phi_estimate(t)
        ref = phi_svd_oracle(t)
        assert abs(phi - ref) <= 1e-8 * max(ref, 1e-30)


def test_phi_bounds_solution_norm():
    rng = np.random.default_rng(23)
    for _ in range(5):
        t = random_upper(rng, 5, diag_sep=0.2)
        e = random_strict_lower(rng, 5)
        sol = solve_scalar(TriEqProblem(t=t, e=e))
        phi = phi_estimate(t)
        bound = np.linalg.norm(e) / phi * (1.0 + 1e-6)
        assert np.linalg.norm(sol.l) <= bound


def test_phi_perturbation_is_two_lipschitz():
    rng = np.random.default_rng(29)
    for _ in range(20):
        t = random_upper(rng, 4, diag_sep=0.3)
        delta = np.triu(
            1e-3 * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        )
        p0 = phi_estimate(t)
        p1 = phi_estimate(t + delta)
        assert abs(p1 - p0) <= 2.0 * np.linalg.norm(delta) * (1.0 + 1e-6)


def test_phi_validation():
    with pytest.raises(ValueError):
        phi_estimate(np.ones((1, 1), dtype=complex))
    with pytest.raises(ValueError):
        phi_estimate(np.eye(65, dtype=complex))
    with pytest.raises(ValueError):
        phi_estimate(np.ones((3, 3), dtype=complex))


def test_invocation_counters():
    rng = np.random.default_rng(37)
    t = random_upper(rng, 16, diag_sep=0.5)
    e = random_strict_lower(rng, 16)
    reset_stats()
    solve_scalar(TriEqProblem(t=t, e=e))
    assert stats() == {
        "scalar_solves": 1,
        "block_solves": 0,
        "sylvester_solves": 0,
    }
    reset_stats()
    solve_block(TriEqProblem(t=t, e=e), n_min=4)
    # 16 -> split (8, 8) -> each splits (4, 4): three Sylvester solves
    counts = stats()
    assert counts["block_solves"] == 1
    assert counts["sylvester_solves"] == 3
    assert counts["scalar_solves"] == 0
    reset_stats()


def test_solution_dataclass_fields():
    sol = TriEqSolution(l=np.zeros((2, 2), dtype=complex), clipped_count=0)
    assert sol.clipped_count == 0
    assert sol.l.shape == (2, 2)
