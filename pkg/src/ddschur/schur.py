"""Complex Schur decomposition in binary64, with eigenvalue reordering.

The pipeline is Householder reduction to Hessenberg form followed by
implicit single-shift QR with the Wilkinson shift.  Reordering moves
diagonal entries to a target permutation through adjacent swaps, each swap
one unitary Givens similarity.  All of it runs in working precision; the
high-precision layers only ever see the finished Q and T.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import backend
from .dd import U_LP
from .matmul import matmul_lp

if backend.USE_NUMBA:
    from . import _numba_kernels as _kern
else:
    from . import _numpy_kernels as _kern


class NoConvergence(Exception):
    """QR iteration failed to deflate an eigenvalue within the sweep budget."""


@dataclass
class SchurPair:
    """A unitary/triangular factorization A ~ Q T Q^H.

    The strictly lower triangle of t holds exact zeros.  tri_residual is
    filled lazily because it needs the original matrix.
    """

    q: np.ndarray
    t: np.ndarray
    ortho_residual: float
    tri_residual: Optional[float] = None

    def fill_tri_residual(self, a):
        from .ddmatrix import stril_extract, frobenius_norm

        qaq = matmul_lp(matmul_lp(self.q, np.asfortranarray(a, dtype=complex),
                                  trans_a=True), self.q)
        e, _ = stril_extract(qaq)
        self.tri_residual = float(frobenius_norm(e).hi)
        return self.tri_residual


@dataclass
class EigOrder:
    permutation: np.ndarray


def _ortho_residual(q):
    n = q.shape[0]
    g = matmul_lp(q, q, trans_a=True)
    return float(np.linalg.norm(g - np.eye(n), "fro"))


# ---------------------------------------------------------------------------
# Hessenberg reduction


def hessenberg_reduce(a):
    """Reduce A to upper Hessenberg H = Q0^H A Q0 with accumulated Q0.

    Householder reflectors are applied two-sided and accumulated into an
    explicit unitary Q0; columns that already carry no mass below the
    subdiagonal are skipped, so a Hessenberg input comes back unchanged.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("hessenberg_reduce needs a square matrix")
    n = a.shape[0]
    h = np.asfortranarray(a, dtype=np.complex128).copy(order="F")
    q0 = np.eye(n, dtype=np.complex128, order="F")
    for k in range(n - 2):
        x = h[k + 1:, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        alpha = np.linalg.norm(x)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        beta = 2.0 / np.vdot(v, v).real
        # two-sided application: H <- P H P with P = I - beta v v^H
        h[k + 1:, k:] -= beta * np.outer(v, np.conj(v) @ h[k + 1:, k:])
        h[:, k + 1:] -= beta * np.outer(h[:, k + 1:] @ v, np.conj(v))
        q0[:, k + 1:] -= beta * np.outer(q0[:, k + 1:] @ v, np.conj(v))
        h[k + 2:, k] = 0.0
    return q0, h


# ---------------------------------------------------------------------------
# implicit single-shift QR


def _wilkinson_shift(a, b, c, d):
    """Eigenvalue of [[a, b], [c, d]] closer to d, as a complex scalar."""
    tr2 = (a + d) / 2.0
    disc = np.sqrt(((a - d) / 2.0) ** 2 + b * c)
    e1 = tr2 + disc
    e2 = tr2 - disc
    return e1 if abs(e1 - d) <= abs(e2 - d) else e2


def _split_planes(m):
    return (np.array(m.real, dtype=np.float64, order="F"),
            np.array(m.imag, dtype=np.float64, order="F"))


def qr_schur_lp(a):
    """Complex Schur decomposition by single-shift implicit QR.

    Deflates h[i+1, i] to an exact zero once it falls below
    u_lp * (|h[i, i]| + |h[i+1, i+1]|); takes an exceptional shift every 10
    stalled sweeps and raises NoConvergence after 30n sweeps on one
    eigenvalue.  Deflation and shifts stay in the driver; bulge chases run
    in the backend kernel on split re/im planes.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("qr_schur_lp needs a square matrix")
    n = a.shape[0]
    if n == 0:
        raise ValueError("empty matrix")
    if n == 1:
        q = np.eye(1, dtype=complex, order="F")
        return SchurPair(q=q, t=np.asfortranarray(a, dtype=complex).copy(),
                         ortho_residual=0.0)
    q0, h = hessenberg_reduce(a)
    hr, hi = _split_planes(h)
    qre, qim = _split_planes(q0)
    limit = 30 * n
    m = n - 1
    sweeps = 0
    while m > 0:
        # deflate every negligible subdiagonal entry in the active window
        l = m
        while l > 0:
            sub = abs(complex(hr[l, l - 1], hi[l, l - 1]))
            diag = (abs(complex(hr[l - 1, l - 1], hi[l - 1, l - 1]))
                    + abs(complex(hr[l, l], hi[l, l])))
            if sub <= U_LP * diag:
                hr[l, l - 1] = 0.0
                hi[l, l - 1] = 0.0
                break
            l -= 1
        if l == m:
            m -= 1
            sweeps = 0
            continue
        sweeps += 1
        if sweeps > limit:
            raise NoConvergence(
                "eigenvalue %d not deflated after %d sweeps" % (m, limit)
            )
        if sweeps % 10 == 0:
            # exceptional shift to break symmetric stagnation cycles
            shift = (complex(hr[m, m], hi[m, m])
                     + 0.75 * abs(complex(hr[m, m - 1], hi[m, m - 1])))
        else:
            shift = _wilkinson_shift(
                complex(hr[m - 1, m - 1], hi[m - 1, m - 1]),
                complex(hr[m - 1, m], hi[m - 1, m]),
                complex(hr[m, m - 1], hi[m, m - 1]),
                complex(hr[m, m], hi[m, m]),
            )
        x = complex(hr[l, l], hi[l, l]) - shift
        y = complex(hr[l + 1, l], hi[l + 1, l])
        _kern.qr_sweep(hr, hi, qre, qim, l, m, x.real, x.imag, y.real, y.imag)
    t = np.asfortranarray(np.triu(hr + 1j * hi))
    q = np.asfortranarray(qre + 1j * qim)
    return SchurPair(q=q, t=t, ortho_residual=_ortho_residual(q))


# ---------------------------------------------------------------------------
# eigenvalue ordering


def order_by_random_line(eigs, rng=None, theta=None):
    """Sort order of eigenvalues projected on a random line.

    The direction theta is drawn once from rng (a numpy Generator; a fresh
    Philox stream when omitted); pass theta explicitly to pin the line.
    Ties keep their original relative order.
    """
    eigs = np.asarray(eigs, dtype=complex)
    if eigs.ndim != 1 or eigs.size < 1:
        raise ValueError("need a 1-d nonempty eigenvalue array")
    if theta is None:
        if rng is None:
            rng = np.random.Generator(np.random.Philox(0))
        theta = float(rng.uniform(0.0, 2.0 * np.pi))
    keys = np.real(np.exp(-1j * theta) * eigs)
    return EigOrder(permutation=np.argsort(keys, kind="stable"))


def reorder_schur(pair, order):
    """Permute the diagonal of T to the target order by adjacent swaps.

    Every swap is performed unconditionally (adjacent 1x1 swaps are stable
    even for nearly equal diagonal entries).  The swap positions depend only
    on the permutation, so they are sequenced here and applied in one
    backend kernel call.  Returns a fresh pair; the identity permutation
    reproduces the input bit for bit.
    """
    perm = np.asarray(order.permutation)
    n = pair.t.shape[0]
    if perm.shape != (n,) or sorted(perm.tolist()) != list(range(n)):
        raise ValueError("order is not a permutation of 0..%d" % (n - 1))
    # slot[i]: original diagonal index currently sitting at position i
    slot = list(range(n))
    seq = []
    for i in range(n):
        j = slot.index(perm[i])
        while j > i:
            seq.append(j - 1)
            slot[j - 1], slot[j] = slot[j], slot[j - 1]
            j -= 1
    if not seq:
        return SchurPair(q=pair.q.copy(order="F"), t=pair.t.copy(order="F"),
                         ortho_residual=pair.ortho_residual)
    tr, ti = _split_planes(pair.t)
    qre, qim = _split_planes(pair.q)
    _kern.apply_swaps(tr, ti, qre, qim, np.asarray(seq, dtype=np.int64))
    t = np.asfortranarray(tr + 1j * ti)
    q = np.asfortranarray(qre + 1j * qim)
    return SchurPair(q=q, t=t, ortho_residual=_ortho_residual(q))
