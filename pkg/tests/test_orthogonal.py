"""Tests for the orthogonalization steps.

Oracle: the unitary polar factor computed by the full Newton iteration
X <- (X + X^-H)/2 run to convergence in binary64.  Both the QR
retraction and the Newton-Schulz step agree with the polar factor to
first order, which pins their behaviour on near-unitary input.
"""

import math

import numpy as np
import pytest

from ddschur.dd import U_HP, DDReal
from ddschur.ddmatrix import DDMatrix, frobenius_norm
from ddschur.matmul import matmul_hp
from ddschur.orthogonal import (
    NormTooLarge,
    OrthoStrategy,
    RankDeficient,
    merged_update,
    newton_schulz_step,
    qr_retract,
)


def polar_newton_lp(m):
    """Unitary polar factor by the full Newton iteration, binary64."""
    x = np.array(m, dtype=complex)
    for _ in range(60):
        nxt = 0.5 * (x + np.linalg.inv(x).conj().T)
        if np.linalg.norm(nxt - x) <= 1e-15 * np.linalg.norm(nxt):
            return nxt
        x = nxt
    return x


def ddnorm(m):
    return float(frobenius_norm(m))


def ortho_residual(q):
    g = matmul_hp(q, q, trans_a=True) - DDMatrix.eye(q.rows)
    return ddnorm(g)


def random_unitary(rng, n):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return qr_retract(DDMatrix.from_lp(m))


def random_skew(rng, n, norm):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    k = x - x.conj().T
    return k * (norm / np.linalg.norm(k))


def random_hermitian(rng, n, norm):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = x + x.conj().T
    return h * (norm / np.linalg.norm(h))


def perturbed_unitary(rng, n, hermitian_norm):
    """U (I + s H) with ||Q^H Q - I||_F close to 2 * hermitian_norm."""
    u = random_unitary(rng, n)
    h = random_hermitian(rng, n, hermitian_norm)
    return matmul_hp(u, DDMatrix.from_lp(np.eye(n) + h))


def apply_tangent(q, w):
    """Q (I + W) in hp: one matmul plus an exact add."""
    return q + matmul_hp(q, DDMatrix.from_lp(w))


def test_qr_retract_unitary_input_is_fixed_point():
    rng = np.random.default_rng(1)
    u = random_unitary(rng, 6)
    out = qr_retract(u)
    assert ddnorm(out - u) <= 100 * 6 * U_HP
    assert ortho_residual(out) <= 100 * 6 * U_HP


def test_qr_retract_scaled_identity():
    out = qr_retract(DDMatrix.from_lp(2.0 * np.eye(5, dtype=complex)))
    assert out.bits_equal(DDMatrix.eye(5))


def test_qr_retract_matches_polar_oracle_to_first_order():
    rng = np.random.default_rng(2)
    k = random_skew(rng, 6, 1e-4)
    m = np.eye(6) + k
    out = qr_retract(DDMatrix.from_lp(m)).to_lp()
    ref = polar_newton_lp(m)
    assert np.linalg.norm(out - ref) <= 1e-8


def test_qr_retract_positive_diagonal_convention():
    rng = np.random.default_rng(3)
    m = DDMatrix.from_lp(
        rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    )
    q = qr_retract(m)
    r = matmul_hp(q, m, trans_a=True)
    for kk in range(5):
        assert float(r[kk, kk].re) > 0
        assert abs(float(r[kk, kk].im)) <= 100 * 5 * U_HP * ddnorm(m)


def test_qr_retract_rank_deficient():
    m = np.eye(4, dtype=complex)
    m[:, 2] = 0.0
    with pytest.raises(RankDeficient):
        qr_retract(DDMatrix.from_lp(m))


def test_qr_retract_requires_square():
    with pytest.raises(ValueError):
        qr_retract(DDMatrix.zeros(3, 4))


def test_newton_schulz_unitary_fixed_point():
    rng = np.random.default_rng(4)
    u = random_unitary(rng, 6)
    out = newton_schulz_step(u)
    assert ddnorm(out - u) <= 200 * 6 * U_HP


def test_newton_schulz_scalar_value():
    out = newton_schulz_step(DDMatrix.from_lp(np.array([[1.1 + 0j]])))
    expected = 0.5 * 1.1 * (3.0 - 1.1 * 1.1)
    assert abs(out[0, 0].re.hi - expected) <= 1e-15
    assert abs(expected - 0.98450) <= 1e-5


def test_newton_schulz_norm_guard():
    with pytest.raises(NormTooLarge):
        newton_schulz_step(DDMatrix.from_lp(2.0 * np.eye(3, dtype=complex)))


def test_newton_schulz_residual_identity():
    # Q_new^H Q_new - I equals -(3/4) D^2 + (1/4) D^3 with D = Qhat^H Qhat - I
    rng = np.random.default_rng(5)
    qhat = perturbed_unitary(rng, 5, 0.01)
    out = newton_schulz_step(qhat)
    lhs = matmul_hp(out, out, trans_a=True) - DDMatrix.eye(5)
    delta = matmul_hp(qhat, qhat, trans_a=True) - DDMatrix.eye(5)
    d2 = matmul_hp(delta, delta)
    d3 = matmul_hp(d2, delta)
    rhs = d3.scale(0.25) - d2.scale(0.75)
    assert ddnorm(lhs - rhs) <= 1e-29


def test_newton_schulz_fourth_order_drop():
    rng = np.random.default_rng(6)
    u = random_unitary(rng, 6)
    k = random_skew(rng, 6, 1e-5)
    qhat = apply_tangent(u, k)
    delta = matmul_hp(qhat, qhat, trans_a=True) - DDMatrix.eye(6)
    out = newton_schulz_step(qhat)
    resid = ortho_residual(out)
    assert resid <= 0.75 * ddnorm(delta) ** 2 * (1.0 + 1e-3)


def test_newton_schulz_quadratic_decrease_applied_twice():
    rng = np.random.default_rng(7)
    qhat = perturbed_unitary(rng, 6, 0.05)
    d0 = ortho_residual(qhat)
    q1 = newton_schulz_step(qhat)
    d1 = ortho_residual(q1)
    q2 = newton_schulz_step(q1)
    d2 = ortho_residual(q2)
    assert 0.01 <= d0 <= 0.5
    assert d1 <= 0.8 * d0 * d0
    assert d2 <= 0.8 * d1 * d1


def test_merged_update_zero_w_zero_y_is_identity():
    rng = np.random.default_rng(8)
    q = random_unitary(rng, 5)
    out = merged_update(q, np.zeros((5, 5), complex), DDMatrix.zeros(5, 5))
    assert out.bits_equal(q)


def test_merged_update_scalar_expansion():
    y = 1e-3
    q = DDMatrix.from_lp(np.array([[1.0 + 0j]]))
    ymat = DDMatrix.from_lp(np.array([[y + 0j]]))
    out = merged_update(q, np.zeros((1, 1), complex), ymat)
    assert float(out[0, 0].re) == 1.0 - 0.5 * y
    assert float(out[0, 0].im) == 0.0


def test_merged_update_matches_ns_composition():
    # truncation error sits at ||W||^2 ||Y|| and below; with unitary Q the
    # difference to the explicit composition is far under ||W||^4
    rng = np.random.default_rng(9)
    u = random_unitary(rng, 6)
    w = random_skew(rng, 6, 1e-4)
    y = matmul_hp(u, u, trans_a=True) - DDMatrix.eye(6)
    merged = merged_update(u, w, y)
    composed = newton_schulz_step(apply_tangent(u, w))
    assert ddnorm(merged - composed) <= 1e-16


def test_merged_update_full_sigma_matches_ns_to_working_precision():
    rng = np.random.default_rng(10)
    u = random_unitary(rng, 6)
    w = random_skew(rng, 6, 1e-6)
    y = matmul_hp(u, u, trans_a=True) - DDMatrix.eye(6)
    merged = merged_update(u, w, y, restore_full_sigma=True)
    composed = newton_schulz_step(apply_tangent(u, w))
    assert ddnorm(merged - composed) <= 1e-28


def test_merged_update_dimension_mismatch():
    q = DDMatrix.zeros(3, 3)
    with pytest.raises(ValueError):
        merged_update(q, np.zeros((2, 2), complex), DDMatrix.zeros(3, 3))
    with pytest.raises(ValueError):
        merged_update(q, np.zeros((3, 3), complex), DDMatrix.zeros(2, 2))


@pytest.mark.parametrize("eps", [1e-3, 1e-5])
@pytest.mark.parametrize(
    "strategy", [OrthoStrategy.NEWTON_SCHULZ, OrthoStrategy.QR_RETRACTION]
)
def test_entry_exit_contract(eps, strategy):
    """||Q^H Q - I|| <= eps^2 and ||W|| <= eps must yield a fourth-order
    orthogonality residual and a second-order displacement."""
    rng = np.random.default_rng(hash((eps, strategy.value)) % 2**32)
    for _ in range(10):
        q = perturbed_unitary(rng, 6, 0.45 * eps * eps)
        w = random_skew(rng, 6, 0.95 * eps)
        target = apply_tangent(q, w)
        if strategy is OrthoStrategy.NEWTON_SCHULZ:
            y = matmul_hp(q, q, trans_a=True) - DDMatrix.eye(6)
            q_new = merged_update(q, w, y)
        else:
            q_new = qr_retract(target)
        assert ortho_residual(q_new) <= 10.0 * eps**4
        assert ddnorm(q_new - target) <= 10.0 * eps**2


def test_strategy_enum_values():
    assert OrthoStrategy.NEWTON_SCHULZ.value == "ns"
    assert OrthoStrategy.QR_RETRACTION.value == "qr"
