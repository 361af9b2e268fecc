"""Deterministic matrix multiplication at both precisions.

The reference summation order (fixed panels over the inner dimension,
left-to-right accumulation inside a panel, left-to-right merge of panel
partials) is what makes results reproducible bit for bit regardless of the
thread count: threads only ever split over output entries.  np.matmul is
deliberately not used here; BLAS reduction orders move with threading.

An optional fast path (enable with ozaki=True or DDSCHUR_OZAKI=1) slices hp
operands into scaled integer-valued binary64 matrices whose products are
exact, computes those with BLAS, and recombines in fixed order.  Slice
products are exact, so it happens to be deterministic too, but only the
error bound is guaranteed, not bit identity with the reference order.
"""

import math
import os
import time

import numpy as np

from . import backend
from ._numpy_kernels import v_add, v_sub
from .ddmatrix import DDMatrix

if backend.USE_NUMBA:
    from . import _numba_kernels as _kern
else:
    from . import _numpy_kernels as _npk

DEFAULT_PANEL = 32

_counters = {"hp_calls": 0, "hp_seconds": 0.0, "lp_calls": 0, "lp_seconds": 0.0}


def reset_counters():
    for k in _counters:
        _counters[k] = 0.0 if k.endswith("seconds") else 0


def counters():
    return dict(_counters)


def _check_dims(a_cols, b_rows):
    if a_cols != b_rows:
        raise ValueError(
            "inner dimensions disagree: %d vs %d" % (a_cols, b_rows)
        )


def matmul_hp(a, b, trans_a=False, trans_b=False, panel=None, ozaki=None):
    """C = op(A) op(B) in double-double, op = conjugate transpose on flag.

    Transposed operands are materialized up front so one kernel covers all
    flag combinations with one summation order.
    """
    if panel is None:
        panel = DEFAULT_PANEL
    if panel < 1:
        raise ValueError("panel must be positive")
    if ozaki is None:
        ozaki = _OZAKI_DEFAULT
    aa = a.conj_t() if trans_a else a
    bb = b.conj_t() if trans_b else b
    _check_dims(aa.cols, bb.rows)
    t0 = time.perf_counter()
    if ozaki:
        out = _ozaki_gemm_hp(aa, bb)
    else:
        out = tuple(
            np.zeros((aa.rows, bb.cols), order="F") for _ in range(4)
        )
        if backend.USE_NUMBA:
            _kern.gemm_hp(*out, *aa.cells(), *bb.cells(), panel)
        else:
            _npk.gemm_hp(out, aa.cells(), bb.cells(), panel)
        out = DDMatrix(*out)
    _counters["hp_calls"] += 1
    _counters["hp_seconds"] += time.perf_counter() - t0
    return out


def matmul_lp(a, b, trans_a=False, trans_b=False, panel=None):
    """C = op(A) op(B) in complex binary64 with the hp summation order."""
    if panel is None:
        panel = DEFAULT_PANEL
    if panel < 1:
        raise ValueError("panel must be positive")
    aa = np.asarray(a, dtype=np.complex128)
    bb = np.asarray(b, dtype=np.complex128)
    if trans_a:
        aa = aa.conj().T
    if trans_b:
        bb = bb.conj().T
    _check_dims(aa.shape[1], bb.shape[0])
    ar = np.asfortranarray(aa.real)
    ai = np.asfortranarray(aa.imag)
    br = np.asfortranarray(bb.real)
    bi = np.asfortranarray(bb.imag)
    out_re = np.zeros((aa.shape[0], bb.shape[1]), order="F")
    out_im = np.zeros((aa.shape[0], bb.shape[1]), order="F")
    t0 = time.perf_counter()
    if backend.USE_NUMBA:
        _kern.gemm_lp(out_re, out_im, ar, ai, br, bi, panel)
    else:
        _npk.gemm_lp(out_re, out_im, ar, ai, br, bi, panel)
    _counters["lp_calls"] += 1
    _counters["lp_seconds"] += time.perf_counter() - t0
    return np.asfortranarray(out_re + 1j * out_im)


# ---------------------------------------------------------------------------
# spectral norm


def spectral_norm_estimate(m, rel_tol=1e-6, max_iters=200):
    """Largest singular value by power iteration on M^H M.

    Deterministic fixed start vector; stops when successive estimates agree
    to rel_tol or after max_iters rounds.
    """
    m = np.asarray(m, dtype=np.complex128)
    rows, cols = m.shape
    v = (1.0 + (np.arange(cols) % 7) / 8.0).astype(np.complex128)
    v = v.reshape(cols, 1) / np.linalg.norm(v)
    prev = 0.0
    est = 0.0
    for _ in range(max_iters):
        u = matmul_lp(m, v)
        est = float(np.linalg.norm(u))
        if est == 0.0:
            return 0.0
        w = matmul_lp(m, u, trans_a=True)
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return est
        v = w / nw
        if abs(est - prev) <= rel_tol * est:
            break
        prev = est
    return est


# ---------------------------------------------------------------------------
# Ozaki-style sliced fast path

_OZAKI_DEFAULT = os.environ.get("DDSCHUR_OZAKI", "") == "1"


def _slice_real(hi, lo, w, n_slices, per_row):
    """Split a double-double real matrix into integer-valued binary64 slices.

    Returns (slices, tau) with value = sum_s slices[s] * tau * 2**(-w*(s+1))
    up to a remainder below 2**(-w*n_slices) * tau; tau is a per-row (or
    per-column) power of two covering the hi magnitudes.
    """
    axis = 1 if per_row else 0
    mu = np.max(np.abs(hi), axis=axis)
    _, exp = np.frexp(mu)
    tau = np.ldexp(1.0, exp)
    shape = (-1, 1) if per_row else (1, -1)
    inv_tau = (1.0 / tau).reshape(shape)
    rh = hi * inv_tau    # exact: tau is a power of two
    rl = lo * inv_tau
    slices = []
    for s in range(n_slices):
        scale = math.ldexp(1.0, w * (s + 1))
        c = np.rint(rh * scale)
        slices.append(c)
        # subtract the captured chunk exactly and keep slicing the remainder
        rh, rl = v_sub(rh, rl, c / scale, np.zeros_like(c))
    return slices, tau.reshape(shape)


def _ozaki_real_accum(xs, tau_x, ys, tau_y, w):
    """Sum of slice GEMMs for one real product, fixed (diagonal, row) order.

    Each slice product is a sum of <= k integers bounded by 2**(2w), all
    below 2**53, so np.matmul returns it exactly and the BLAS reduction
    order cannot matter.
    """
    n_slices = len(xs)
    m = xs[0].shape[0]
    n = ys[0].shape[1]
    acc_h = np.zeros((m, n), order="F")
    acc_l = np.zeros((m, n), order="F")
    for d in range(n_slices):
        for s in range(d + 1):
            t = d - s
            g = np.matmul(xs[s], ys[t])
            scale = math.ldexp(1.0, -w * (s + t + 2))
            term = (g * scale) * tau_x * tau_y    # powers of two: exact
            acc_h, acc_l = v_add(acc_h, acc_l, term, np.zeros_like(term))
    return acc_h, acc_l


def _ozaki_gemm_hp(a, b):
    k = a.cols
    w = (52 - max(1, int(math.ceil(math.log2(max(k, 2)))))) // 2
    n_slices = int(math.ceil(107.0 / w))
    ar, tau_ar = _slice_real(a.re_hi, a.re_lo, w, n_slices, per_row=True)
    ai, tau_ai = _slice_real(a.im_hi, a.im_lo, w, n_slices, per_row=True)
    br, tau_br = _slice_real(b.re_hi, b.re_lo, w, n_slices, per_row=False)
    bi, tau_bi = _slice_real(b.im_hi, b.im_lo, w, n_slices, per_row=False)
    rr_h, rr_l = _ozaki_real_accum(ar, tau_ar, br, tau_br, w)
    ii_h, ii_l = _ozaki_real_accum(ai, tau_ai, bi, tau_bi, w)
    ri_h, ri_l = _ozaki_real_accum(ar, tau_ar, bi, tau_bi, w)
    ir_h, ir_l = _ozaki_real_accum(ai, tau_ai, br, tau_br, w)
    out_rh, out_rl = v_sub(rr_h, rr_l, ii_h, ii_l)
    out_ih, out_il = v_add(ri_h, ri_l, ir_h, ir_l)
    return DDMatrix(out_rh, out_rl, out_ih, out_il)
