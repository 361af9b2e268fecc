"""Orthogonalization steps used by the refinement drivers.

Both procedures obey the same contract: given Q with
||Q^H Q - I||_F <= eps^2 and a skew-Hermitian W with ||W||_F <= eps,
the result Q_new satisfies ||Q_new^H Q_new - I||_F = O(eps^4) and
||Q_new - Q(I+W)||_F = O(eps^2).  In words: orthogonality improves two
orders, while the matrix moves no further than second order.

Two strategies are offered.  `qr_retract` extracts the unitary QR
factor with the column-phase convention that makes R's diagonal real
and positive.  `newton_schulz_step` applies one step of
Q <- (1/2) Q (3I - Q^H Q).  `merged_update` is the production form of
the latter: it expands the step around Q(I+W), computes every product
involving the small factors W and Y = Q^H Q - I in binary64, and
spends only one double-double matmul (plus the caller's Y) per call.
"""

import enum
import math

import numpy as np

from . import dd
from ._numpy_kernels import v_add, v_cmul, v_mul, v_sub
from .ddmatrix import DDMatrix, frobenius_norm
from .matmul import matmul_hp, matmul_lp, spectral_norm_estimate


class OrthoStrategy(enum.Enum):
    QR_RETRACTION = "qr"
    NEWTON_SCHULZ = "ns"


class RankDeficient(Exception):
    """The matrix handed to qr_retract is numerically rank deficient."""


class NormTooLarge(Exception):
    """Spectral norm at or above sqrt(3); Newton-Schulz would diverge."""


def _seg(cells, rows, col):
    return tuple(c[rows, col].copy() for c in cells)


def _segment_norm(vrh, vrl, vih, vil):
    """Frobenius norm of a cell-array vector as a (hi, lo) pair."""
    m = DDMatrix(
        vrh.reshape(-1, 1), vrl.reshape(-1, 1),
        vih.reshape(-1, 1), vil.reshape(-1, 1),
    )
    nrm = frobenius_norm(m)
    return nrm.hi, nrm.lo


def qr_retract(m):
    """Unitary QR factor of a square matrix, in double-double throughout.

    Householder reduction; afterwards each column of Q is rotated by the
    phase of the matching R diagonal entry, so the factorization this Q
    pairs with has a real positive diagonal in R.  Raises RankDeficient
    when some |r_kk| falls at or below n * u_hp * ||M||_F.
    """
    if m.rows != m.cols:
        raise ValueError("qr_retract expects a square matrix")
    n = m.rows
    norm_m = frobenius_norm(m).hi
    r = m.copy()
    rc = list(r.cells())
    reflectors = []
    for k in range(n):
        rows = slice(k, n)
        x = _seg(rc, rows, k)
        seg_hi, seg_lo = _segment_norm(*x)
        if seg_hi == 0.0:
            reflectors.append(None)
            continue
        x0re = dd.DDReal._raw(float(x[0][0]), float(x[1][0]))
        x0im = dd.DDReal._raw(float(x[2][0]), float(x[3][0]))
        mag0 = (x0re * x0re + x0im * x0im).sqrt()
        seg = dd.DDReal._raw(seg_hi, seg_lo)
        if mag0.hi == 0.0:
            ph_re, ph_im = dd.DDReal._raw(1.0, 0.0), dd.DDReal._raw(0.0, 0.0)
        else:
            ph_re, ph_im = x0re / mag0, x0im / mag0
        # v = x + phase * ||x|| * e_1; ||v||^2 = 2 ||x|| (||x|| + |x_0|)
        v0re = x0re + ph_re * seg
        v0im = x0im + ph_im * seg
        v = tuple(c.copy() for c in x)
        v[0][0], v[1][0] = v0re.hi, v0re.lo
        v[2][0], v[3][0] = v0im.hi, v0im.lo
        denom = seg * (seg + mag0)
        beta = dd.DDReal(1.0) / denom
        _apply_reflector_cols(rc, k, v, (beta.hi, beta.lo), k)
        reflectors.append((k, v, (beta.hi, beta.lo)))
    q = DDMatrix.eye(n)
    qc = list(q.cells())
    for item in reversed(reflectors):
        if item is None:
            continue
        k, v, beta = item
        _apply_reflector_cols(qc, k, v, beta, 0)
    # phase fix: rotate column k by r_kk / |r_kk|
    for k in range(n):
        dre = dd.DDReal._raw(float(rc[0][k, k]), float(rc[1][k, k]))
        dim = dd.DDReal._raw(float(rc[2][k, k]), float(rc[3][k, k]))
        mag = (dre * dre + dim * dim).sqrt()
        if mag.hi <= n * dd.U_HP * norm_m:
            raise RankDeficient(
                f"diagonal entry {k} of R has magnitude {mag.hi:.3e}"
            )
        ph_re, ph_im = dre / mag, dim / mag
        crh, crl, cih, cil = (c[:, k] for c in qc)
        nrh, nrl, nih, nil = v_cmul(
            crh, crl, cih, cil, ph_re.hi, ph_re.lo, ph_im.hi, ph_im.lo
        )
        qc[0][:, k], qc[1][:, k] = nrh, nrl
        qc[2][:, k], qc[3][:, k] = nih, nil
    return DDMatrix(*qc)


def _apply_reflector_cols(cells, k, v, beta, col0):
    """Apply I - beta v v^H to rows k: of columns col0: in place."""
    rh, rl, ih, il = cells
    m = v[0].shape[0]
    width = rh.shape[1] - col0
    wrh = np.zeros(width)
    wrl = np.zeros_like(wrh)
    wih = np.zeros_like(wrh)
    wil = np.zeros_like(wrh)
    cols = slice(col0, rh.shape[1])
    for i in range(m):
        prh, prl, pih, pil = v_cmul(
            v[0][i], v[1][i], -v[2][i], -v[3][i],
            rh[k + i, cols], rl[k + i, cols], ih[k + i, cols], il[k + i, cols],
        )
        wrh, wrl = v_add(wrh, wrl, prh, prl)
        wih, wil = v_add(wih, wil, pih, pil)
    wrh, wrl = v_mul(wrh, wrl, beta[0], beta[1])
    wih, wil = v_mul(wih, wil, beta[0], beta[1])
    for i in range(m):
        prh, prl, pih, pil = v_cmul(
            v[0][i], v[1][i], v[2][i], v[3][i], wrh, wrl, wih, wil
        )
        rh[k + i, cols], rl[k + i, cols] = v_sub(
            rh[k + i, cols], rl[k + i, cols], prh, prl
        )
        ih[k + i, cols], il[k + i, cols] = v_sub(
            ih[k + i, cols], il[k + i, cols], pih, pil
        )


def newton_schulz_step(qhat):
    """One Newton-Schulz orthogonalization step in double-double.

    Costs exactly two hp matmuls.  Requires ||Qhat||_2 < sqrt(3) for the
    underlying iteration to contract; the norm is estimated by power
    iteration on the binary64 downcast.
    """
    if qhat.rows != qhat.cols:
        raise ValueError("newton_schulz_step expects a square matrix")
    est = spectral_norm_estimate(qhat.to_lp())
    if not est < math.sqrt(3.0):
        raise NormTooLarge(
            f"spectral norm estimate {est:.6f} is not below sqrt(3)"
        )
    g = matmul_hp(qhat, qhat, trans_a=True)
    sigma = DDMatrix.eye(qhat.rows, 3.0) - g
    return matmul_hp(qhat, sigma).scale(0.5)


def merged_update(q, w, y, restore_full_sigma=False):
    """Newton-Schulz step on Q(I+W), merged to one hp matmul.

    With Y = Q^H Q - I precomputed by the caller (its matmul is
    accounted there), the step expands to
    Q_new = (1/2) Q (2I + 2W - Y - YW + W^2 + W^3 + W^2 Y + W^2 Y W).
    Every product of the small matrices is formed in binary64; the sum
    is carried out in double-double, left to right in the order written.
    The two last terms fall below binary64 roundoff near convergence and
    are dropped by default; restore_full_sigma keeps them.
    """
    w = np.asarray(w, dtype=np.complex128)
    n = q.rows
    if q.cols != n or w.shape != (n, n) or y.shape != (n, n):
        raise ValueError("q, w, y must all be n x n")
    y_lp = y.to_lp()
    yw = matmul_lp(y_lp, w)
    w2 = matmul_lp(w, w)
    w3 = matmul_lp(w2, w)
    sigma = DDMatrix.eye(n, 2.0) + DDMatrix.from_lp(2.0 * w)
    sigma = sigma - y
    sigma = sigma - DDMatrix.from_lp(yw)
    sigma = sigma + DDMatrix.from_lp(w2)
    sigma = sigma + DDMatrix.from_lp(w3)
    if restore_full_sigma:
        w2y = matmul_lp(w2, y_lp)
        w2yw = matmul_lp(w2y, w)
        sigma = sigma + DDMatrix.from_lp(w2y)
        sigma = sigma + DDMatrix.from_lp(w2yw)
    return matmul_hp(q, sigma).scale(0.5)
