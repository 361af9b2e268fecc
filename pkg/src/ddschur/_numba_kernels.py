"""Compiled GEMM and rotation kernels.

Only imported when the numba backend is active.  GEMM parallelism is over
output columns: each output entry is accumulated sequentially by one thread
in the panel order documented in _numpy_kernels.gemm_hp, so results do not
depend on the thread count.  The rotation kernels are sequential; every
expression mirrors its _numpy_kernels twin token for token.
"""

import math

import numba
import numpy as np

from . import dd


@numba.njit(parallel=True, cache=True)
def gemm_hp(orh, orl, oih, oil, arh, arl, aih, ail, brh, brl, bih, bil, panel):
    m, k = arh.shape
    n = brh.shape[1]
    for j in numba.prange(n):
        for i in range(m):
            acc_rh = 0.0
            acc_rl = 0.0
            acc_ih = 0.0
            acc_il = 0.0
            for p0 in range(0, k, panel):
                p1 = min(p0 + panel, k)
                prh = 0.0
                prl = 0.0
                pih = 0.0
                pil = 0.0
                for kk in range(p0, p1):
                    crh, crl, cih, cil = dd.cmul(
                        arh[i, kk], arl[i, kk], aih[i, kk], ail[i, kk],
                        brh[kk, j], brl[kk, j], bih[kk, j], bil[kk, j],
                    )
                    prh, prl = dd.add(prh, prl, crh, crl)
                    pih, pil = dd.add(pih, pil, cih, cil)
                acc_rh, acc_rl = dd.add(acc_rh, acc_rl, prh, prl)
                acc_ih, acc_il = dd.add(acc_ih, acc_il, pih, pil)
            orh[i, j] = acc_rh
            orl[i, j] = acc_rl
            oih[i, j] = acc_ih
            oil[i, j] = acc_il


@numba.njit(parallel=True, cache=True)
def gemm_lp(out_re, out_im, ar, ai, br, bi, panel):
    m, k = ar.shape
    n = br.shape[1]
    for j in numba.prange(n):
        for i in range(m):
            acc_r = 0.0
            acc_i = 0.0
            for p0 in range(0, k, panel):
                p1 = min(p0 + panel, k)
                pr = 0.0
                pi = 0.0
                for kk in range(p0, p1):
                    tr = ar[i, kk] * br[kk, j] - ai[i, kk] * bi[kk, j]
                    ti = ar[i, kk] * bi[kk, j] + ai[i, kk] * br[kk, j]
                    pr = pr + tr
                    pi = pi + ti
                acc_r = acc_r + pr
                acc_i = acc_i + pi
            out_re[i, j] = acc_r
            out_im[i, j] = acc_i


@numba.njit(cache=True)
def cabs(ar, ai):
    aa = abs(ar)
    bb = abs(ai)
    if aa < bb:
        aa, bb = bb, aa
    if aa == 0.0:
        return 0.0
    r = bb / aa
    return aa * math.sqrt(1.0 + r * r)


@numba.njit(cache=True)
def givens_coeffs(xr, xi, yr, yi):
    if yr == 0.0 and yi == 0.0:
        return 1.0, 0.0, 0.0
    if xr == 0.0 and xi == 0.0:
        ag = cabs(yr, yi)
        return 0.0, yr / ag, -yi / ag
    af = cabs(xr, xi)
    ag = cabs(yr, yi)
    d = cabs(af, ag)
    c = af / d
    den = af * d
    sr = (xr * yr + xi * yi) / den
    si = (xi * yr - xr * yi) / den
    return c, sr, si


@numba.njit(cache=True)
def qr_sweep(hr, hi, qre, qim, l, m, xr, xi, yr, yi):
    n = hr.shape[0]
    for k in range(l, m):
        c, sr, si = givens_coeffs(xr, xi, yr, yi)
        col0 = k - 1 if k > l else l
        for j in range(col0, n):
            t0r = hr[k, j]
            t0i = hi[k, j]
            t1r = hr[k + 1, j]
            t1i = hi[k + 1, j]
            hr[k, j] = c * t0r + (sr * t1r - si * t1i)
            hi[k, j] = c * t0i + (sr * t1i + si * t1r)
            hr[k + 1, j] = c * t1r - (sr * t0r + si * t0i)
            hi[k + 1, j] = c * t1i - (sr * t0i - si * t0r)
        if k > l:
            hr[k + 1, k - 1] = 0.0
            hi[k + 1, k - 1] = 0.0
        row1 = min(k + 3, m + 1)
        for i in range(row1):
            t0r = hr[i, k]
            t0i = hi[i, k]
            t1r = hr[i, k + 1]
            t1i = hi[i, k + 1]
            hr[i, k] = c * t0r + (sr * t1r + si * t1i)
            hi[i, k] = c * t0i + (sr * t1i - si * t1r)
            hr[i, k + 1] = c * t1r - (sr * t0r - si * t0i)
            hi[i, k + 1] = c * t1i - (sr * t0i + si * t0r)
        for i in range(n):
            t0r = qre[i, k]
            t0i = qim[i, k]
            t1r = qre[i, k + 1]
            t1i = qim[i, k + 1]
            qre[i, k] = c * t0r + (sr * t1r + si * t1i)
            qim[i, k] = c * t0i + (sr * t1i - si * t1r)
            qre[i, k + 1] = c * t1r - (sr * t0r - si * t0i)
            qim[i, k + 1] = c * t1i - (sr * t0i + si * t0r)
        if k < m - 1:
            xr = hr[k + 1, k]
            xi = hi[k + 1, k]
            yr = hr[k + 2, k]
            yi = hi[k + 2, k]


@numba.njit(cache=True)
def apply_swaps(tr, ti, qre, qim, seq):
    n = tr.shape[0]
    for p in range(seq.shape[0]):
        k = int(seq[p])
        v0r = tr[k, k + 1]
        v0i = ti[k, k + 1]
        v1r = tr[k + 1, k + 1] - tr[k, k]
        v1i = ti[k + 1, k + 1] - ti[k, k]
        nv = cabs(cabs(v0r, v0i), cabs(v1r, v1i))
        if nv == 0.0:
            v0r = 0.0
            v0i = 0.0
            v1r = 1.0
            v1i = 0.0
            nv = 1.0
        g00r = v0r / nv
        g00i = v0i / nv
        g10r = v1r / nv
        g10i = v1i / nv
        for j in range(k, n):
            t0r = tr[k, j]
            t0i = ti[k, j]
            t1r = tr[k + 1, j]
            t1i = ti[k + 1, j]
            tr[k, j] = (g00r * t0r + g00i * t0i) + (g10r * t1r + g10i * t1i)
            ti[k, j] = (g00r * t0i - g00i * t0r) + (g10r * t1i - g10i * t1r)
            tr[k + 1, j] = (g00r * t1r - g00i * t1i) - (g10r * t0r - g10i * t0i)
            ti[k + 1, j] = (g00r * t1i + g00i * t1r) - (g10r * t0i + g10i * t0r)
        for i in range(k + 2):
            t0r = tr[i, k]
            t0i = ti[i, k]
            t1r = tr[i, k + 1]
            t1i = ti[i, k + 1]
            tr[i, k] = (g00r * t0r - g00i * t0i) + (g10r * t1r - g10i * t1i)
            ti[i, k] = (g00r * t0i + g00i * t0r) + (g10r * t1i + g10i * t1r)
            tr[i, k + 1] = (g00r * t1r + g00i * t1i) - (g10r * t0r + g10i * t0i)
            ti[i, k + 1] = (g00r * t1i - g00i * t1r) - (g10r * t0i - g10i * t0r)
        for i in range(n):
            t0r = qre[i, k]
            t0i = qim[i, k]
            t1r = qre[i, k + 1]
            t1i = qim[i, k + 1]
            qre[i, k] = (g00r * t0r - g00i * t0i) + (g10r * t1r - g10i * t1i)
            qim[i, k] = (g00r * t0i + g00i * t0r) + (g10r * t1i + g10i * t1r)
            qre[i, k + 1] = (g00r * t1r + g00i * t1i) - (g10r * t0r + g10i * t0i)
            qim[i, k + 1] = (g00r * t1i - g00i * t1r) - (g10r * t0i - g10i * t0r)
        tr[k + 1, k] = 0.0
        ti[k + 1, k] = 0.0
