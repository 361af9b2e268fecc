"""Pure numpy kernels: double-double helpers, fixed-order GEMMs, rotations.

Every vector helper mirrors its scalar twin in dd.py line for line.  The
elementwise machine operations are then identical to the compiled backend's
scalar sequence, which is what makes results bit-identical across backends.
Do not reorder or algebraically simplify any expression here.
"""

import math

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1, keep equal to dd._SPLITTER


def v_two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def v_quick_two_sum(a, b):
    s = a + b
    e = b - (s - a)
    return s, e


def v_two_prod(a, b):
    p = a * b
    t = _SPLITTER * a
    ahi = t - (t - a)
    alo = a - ahi
    t = _SPLITTER * b
    bhi = t - (t - b)
    blo = b - bhi
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


def v_add(ahi, alo, bhi, blo):
    s1, s2 = v_two_sum(ahi, bhi)
    t1, t2 = v_two_sum(alo, blo)
    s2 = s2 + t1
    s1, s2 = v_quick_two_sum(s1, s2)
    s2 = s2 + t2
    return v_quick_two_sum(s1, s2)


def v_sub(ahi, alo, bhi, blo):
    s1, s2 = v_two_sum(ahi, -bhi)
    t1, t2 = v_two_sum(alo, -blo)
    s2 = s2 + t1
    s1, s2 = v_quick_two_sum(s1, s2)
    s2 = s2 + t2
    return v_quick_two_sum(s1, s2)


def v_mul(ahi, alo, bhi, blo):
    p, e = v_two_prod(ahi, bhi)
    cross = ahi * blo + alo * bhi
    e = e + (cross + alo * blo)
    return v_quick_two_sum(p, e)


def v_mul_d(ahi, alo, b):
    p, e = v_two_prod(ahi, b)
    e = e + alo * b
    return v_quick_two_sum(p, e)


def v_cmul(arh, arl, aih, ail, brh, brl, bih, bil):
    ph, pl = v_mul(arh, arl, brh, brl)
    qh, ql = v_mul(aih, ail, bih, bil)
    reh, rel = v_sub(ph, pl, qh, ql)
    sh, sl = v_mul(arh, arl, bih, bil)
    th, tl = v_mul(aih, ail, brh, brl)
    imh, iml = v_add(sh, sl, th, tl)
    return reh, rel, imh, iml


def gemm_hp(out, a, b, panel):
    """Double-double complex GEMM, C = A B.

    a, b, out are 4-tuples of float64 arrays (re_hi, re_lo, im_hi, im_lo).
    Summation order per output entry: k split into fixed panels, products
    accumulated left to right inside a panel, panel partials merged left to
    right.  The compiled backend runs the same order entry by entry.
    """
    orh, orl, oih, oil = out
    arh, arl, aih, ail = a
    brh, brl, bih, bil = b
    m, k = arh.shape
    n = brh.shape[1]
    for j in range(n):
        acc_rh = np.zeros(m)
        acc_rl = np.zeros(m)
        acc_ih = np.zeros(m)
        acc_il = np.zeros(m)
        for p0 in range(0, k, panel):
            p1 = min(p0 + panel, k)
            prh = np.zeros(m)
            prl = np.zeros(m)
            pih = np.zeros(m)
            pil = np.zeros(m)
            for kk in range(p0, p1):
                crh, crl, cih, cil = v_cmul(
                    arh[:, kk], arl[:, kk], aih[:, kk], ail[:, kk],
                    brh[kk, j], brl[kk, j], bih[kk, j], bil[kk, j],
                )
                prh, prl = v_add(prh, prl, crh, crl)
                pih, pil = v_add(pih, pil, cih, cil)
            acc_rh, acc_rl = v_add(acc_rh, acc_rl, prh, prl)
            acc_ih, acc_il = v_add(acc_ih, acc_il, pih, pil)
        orh[:, j] = acc_rh
        orl[:, j] = acc_rl
        oih[:, j] = acc_ih
        oil[:, j] = acc_il


def gemm_lp(out_re, out_im, ar, ai, br, bi, panel):
    """binary64 complex GEMM with the same panel order as gemm_hp.

    The complex product is written out over real parts so both backends run
    the textbook (ar*br - ai*bi, ar*bi + ai*br) sequence; relying on a
    runtime's own complex multiply could differ between them.
    """
    m, k = ar.shape
    n = br.shape[1]
    for j in range(n):
        acc_r = np.zeros(m)
        acc_i = np.zeros(m)
        for p0 in range(0, k, panel):
            p1 = min(p0 + panel, k)
            pr = np.zeros(m)
            pi = np.zeros(m)
            for kk in range(p0, p1):
                tr = ar[:, kk] * br[kk, j] - ai[:, kk] * bi[kk, j]
                ti = ar[:, kk] * bi[kk, j] + ai[:, kk] * br[kk, j]
                pr = pr + tr
                pi = pi + ti
            acc_r = acc_r + pr
            acc_i = acc_i + pi
        out_re[:, j] = acc_r
        out_im[:, j] = acc_i


def cabs(ar, ai):
    """Overflow-safe |ar + i ai| from abs, /, *, + and one sqrt.

    Library hypot routines are not specified to the last bit and differ
    between runtimes; sqrt is correctly rounded everywhere, so this fixed
    sequence is what keeps rotation coefficients identical across backends.
    """
    aa = abs(ar)
    bb = abs(ai)
    if aa < bb:
        aa, bb = bb, aa
    if aa == 0.0:
        return 0.0
    r = bb / aa
    return aa * math.sqrt(1.0 + r * r)


def givens_coeffs(xr, xi, yr, yi):
    """c real, s = (sr, si) with [[c, s], [-conj(s), c]] @ [x, y] = [r, 0].

    The complex form is c = |x|/d, s = x conj(y) / (|x| d), d = hypot(|x|,
    |y|), spelled out over real parts.
    """
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


def qr_sweep(hr, hi, qre, qim, l, m, xr, xi, yr, yi):
    """One implicit-shift QR bulge chase over the active window [l, m].

    h and q arrive as separate re/im float64 planes; (xr, xi), (yr, yi)
    seed the first rotation from the shifted column and later rotations
    read the bulge entries.  Rows are hit from column col0 on, h columns
    up to row min(k + 3, m + 1), q columns over the full height, exactly
    the footprint a scalar complex implementation would touch.
    """
    n = hr.shape[0]
    for k in range(l, m):
        c, sr, si = givens_coeffs(xr, xi, yr, yi)
        col0 = k - 1 if k > l else l
        # rows k, k+1 from the left: [c r0 + s r1, -conj(s) r0 + c r1]
        t0r = hr[k, col0:].copy()
        t0i = hi[k, col0:].copy()
        t1r = hr[k + 1, col0:].copy()
        t1i = hi[k + 1, col0:].copy()
        hr[k, col0:] = c * t0r + (sr * t1r - si * t1i)
        hi[k, col0:] = c * t0i + (sr * t1i + si * t1r)
        hr[k + 1, col0:] = c * t1r - (sr * t0r + si * t0i)
        hi[k + 1, col0:] = c * t1i - (sr * t0i - si * t0r)
        if k > l:
            hr[k + 1, k - 1] = 0.0    # bulge annihilated by construction
            hi[k + 1, k - 1] = 0.0
        row1 = min(k + 3, m + 1)
        # cols k, k+1 from the right: [c c0 + conj(s) c1, -s c0 + c c1]
        t0r = hr[:row1, k].copy()
        t0i = hi[:row1, k].copy()
        t1r = hr[:row1, k + 1].copy()
        t1i = hi[:row1, k + 1].copy()
        hr[:row1, k] = c * t0r + (sr * t1r + si * t1i)
        hi[:row1, k] = c * t0i + (sr * t1i - si * t1r)
        hr[:row1, k + 1] = c * t1r - (sr * t0r - si * t0i)
        hi[:row1, k + 1] = c * t1i - (sr * t0i + si * t0r)
        t0r = qre[:, k].copy()
        t0i = qim[:, k].copy()
        t1r = qre[:, k + 1].copy()
        t1i = qim[:, k + 1].copy()
        qre[:, k] = c * t0r + (sr * t1r + si * t1i)
        qim[:, k] = c * t0i + (sr * t1i - si * t1r)
        qre[:, k + 1] = c * t1r - (sr * t0r - si * t0i)
        qim[:, k + 1] = c * t1i - (sr * t0i + si * t0r)
        if k < m - 1:
            xr = hr[k + 1, k]
            xi = hi[k + 1, k]
            yr = hr[k + 2, k]
            yi = hi[k + 2, k]


def apply_swaps(tr, ti, qre, qim, seq):
    """Adjacent diagonal swaps of triangular t at positions seq, in order.

    Each swap is the unitary similarity whose first column (v0, v1)/nv,
    v0 = t[k, k+1], v1 = t[k+1, k+1] - t[k, k], spans the eigenvector of
    the trailing diagonal entry; equal uncoupled entries degrade to a plain
    transposition.  t rows are hit from column k, t columns up to row k+2,
    q columns over the full height.
    """
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
        # rows k, k+1 from the left by g^H:
        # [conj(g00) r0 + conj(g10) r1, -g10 r0 + g00 r1]
        t0r = tr[k, k:].copy()
        t0i = ti[k, k:].copy()
        t1r = tr[k + 1, k:].copy()
        t1i = ti[k + 1, k:].copy()
        tr[k, k:] = (g00r * t0r + g00i * t0i) + (g10r * t1r + g10i * t1i)
        ti[k, k:] = (g00r * t0i - g00i * t0r) + (g10r * t1i - g10i * t1r)
        tr[k + 1, k:] = (g00r * t1r - g00i * t1i) - (g10r * t0r - g10i * t0i)
        ti[k + 1, k:] = (g00r * t1i + g00i * t1r) - (g10r * t0i + g10i * t0r)
        # cols k, k+1 from the right by g:
        # [g00 c0 + g10 c1, -conj(g10) c0 + conj(g00) c1]
        t0r = tr[:k + 2, k].copy()
        t0i = ti[:k + 2, k].copy()
        t1r = tr[:k + 2, k + 1].copy()
        t1i = ti[:k + 2, k + 1].copy()
        tr[:k + 2, k] = (g00r * t0r - g00i * t0i) + (g10r * t1r - g10i * t1i)
        ti[:k + 2, k] = (g00r * t0i + g00i * t0r) + (g10r * t1i + g10i * t1r)
        tr[:k + 2, k + 1] = (g00r * t1r + g00i * t1i) - (g10r * t0r + g10i * t0i)
        ti[:k + 2, k + 1] = (g00r * t1i - g00i * t1r) - (g10r * t0i - g10i * t0r)
        t0r = qre[:, k].copy()
        t0i = qim[:, k].copy()
        t1r = qre[:, k + 1].copy()
        t1i = qim[:, k + 1].copy()
        qre[:, k] = (g00r * t0r - g00i * t0i) + (g10r * t1r - g10i * t1i)
        qim[:, k] = (g00r * t0i + g00i * t0r) + (g10r * t1i + g10i * t1r)
        qre[:, k + 1] = (g00r * t1r + g00i * t1i) - (g10r * t0r + g10i * t0i)
        qim[:, k + 1] = (g00r * t1i - g00i * t1r) - (g10r * t0i - g10i * t0r)
        tr[k + 1, k] = 0.0
        ti[k + 1, k] = 0.0
