"""Dense complex matrices at binary64 (lp) and double-double (hp) precision.

The hp type is :class:`DDMatrix`: four column-major float64 cell arrays
(re_hi, re_lo, im_hi, im_lo), each entry a normalized pair.  The lp type is
a plain column-major complex128 ndarray; functions here accept either and
return the kind they were given.  Public operations treat inputs as
immutable and allocate fresh outputs.
"""

import enum

import numpy as np

from . import dd
from ._numpy_kernels import v_add, v_mul, v_mul_d, v_sub, v_two_sum
from .dd import DDComplex, DDReal


class TriangleKind(enum.Enum):
    STRICT_LOWER = "strict_lower"
    UPPER = "upper"          # includes the diagonal
    DIAGONAL = "diagonal"


def _fortran(a):
    return np.asfortranarray(a, dtype=np.float64)


class DDMatrix:
    """Double-double complex dense matrix.

    Cell arrays are column-major so that the equal-size block views used by
    the recursive triangular solver are cheap.  All entries stay normalized
    pairs: every producing operation ends in a renormalizing step.
    """

    __slots__ = ("re_hi", "re_lo", "im_hi", "im_lo")

    def __init__(self, re_hi, re_lo, im_hi, im_lo):
        self.re_hi = _fortran(re_hi)
        self.re_lo = _fortran(re_lo)
        self.im_hi = _fortran(im_hi)
        self.im_lo = _fortran(im_lo)
        shape = self.re_hi.shape
        if len(shape) != 2 or any(c.shape != shape for c in self.cells()):
            raise ValueError("cell arrays must share one 2-d shape")

    def cells(self):
        return self.re_hi, self.re_lo, self.im_hi, self.im_lo

    @property
    def rows(self):
        return self.re_hi.shape[0]

    @property
    def cols(self):
        return self.re_hi.shape[1]

    @property
    def shape(self):
        return self.re_hi.shape

    @classmethod
    def zeros(cls, rows, cols=None):
        cols = rows if cols is None else cols
        return cls(*(np.zeros((rows, cols), order="F") for _ in range(4)))

    @classmethod
    def eye(cls, n, scale=1.0):
        m = cls.zeros(n, n)
        np.fill_diagonal(m.re_hi, float(scale))
        return m

    @classmethod
    def from_lp(cls, a):
        """Exact embedding of a complex128 (or real) matrix; lo cells are 0."""
        a = np.asarray(a)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        z = np.zeros(a.shape, order="F")
        return cls(a.real, z.copy(), a.imag if np.iscomplexobj(a) else z.copy(),
                   z.copy())

    def to_lp(self):
        """Round to complex128; by pair normalization this is the hi cells."""
        return np.asfortranarray(self.re_hi + 1j * self.im_hi)

    def copy(self):
        return DDMatrix(*(c.copy(order="F") for c in self.cells()))

    def conj_t(self):
        """Materialized conjugate transpose."""
        return DDMatrix(self.re_hi.T, self.re_lo.T, -self.im_hi.T, -self.im_lo.T)

    def __getitem__(self, idx):
        i, j = idx
        return DDComplex(
            DDReal._raw(self.re_hi[i, j], self.re_lo[i, j]),
            DDReal._raw(self.im_hi[i, j], self.im_lo[i, j]),
        )

    def __setitem__(self, idx, value):
        i, j = idx
        v = value if isinstance(value, DDComplex) else DDComplex._coerce(value)
        if v is None:
            raise TypeError("cannot store %r in a DDMatrix" % (value,))
        self.re_hi[i, j] = v.re.hi
        self.re_lo[i, j] = v.re.lo
        self.im_hi[i, j] = v.im.hi
        self.im_lo[i, j] = v.im.lo

    def bits_equal(self, other):
        return all(
            np.array_equal(x, y, equal_nan=True)
            for x, y in zip(self.cells(), other.cells())
        )

    def is_finite(self):
        return all(np.isfinite(c).all() for c in self.cells())

    def __add__(self, other):
        if not isinstance(other, DDMatrix):
            return NotImplemented
        rh, rl = v_add(self.re_hi, self.re_lo, other.re_hi, other.re_lo)
        ih, il = v_add(self.im_hi, self.im_lo, other.im_hi, other.im_lo)
        return DDMatrix(rh, rl, ih, il)

    def __sub__(self, other):
        if not isinstance(other, DDMatrix):
            return NotImplemented
        rh, rl = v_sub(self.re_hi, self.re_lo, other.re_hi, other.re_lo)
        ih, il = v_sub(self.im_hi, self.im_lo, other.im_hi, other.im_lo)
        return DDMatrix(rh, rl, ih, il)

    def __neg__(self):
        return DDMatrix(-self.re_hi, -self.re_lo, -self.im_hi, -self.im_lo)

    def scale(self, s):
        """Multiply by a real scalar (float or DDReal)."""
        if isinstance(s, DDReal):
            rh, rl = v_mul(self.re_hi, self.re_lo, s.hi, s.lo)
            ih, il = v_mul(self.im_hi, self.im_lo, s.hi, s.lo)
        else:
            s = float(s)
            rh, rl = v_mul_d(self.re_hi, self.re_lo, s)
            ih, il = v_mul_d(self.im_hi, self.im_lo, s)
        return DDMatrix(rh, rl, ih, il)

    def __repr__(self):
        return "DDMatrix(%d x %d)" % self.shape


# ---------------------------------------------------------------------------
# precision conversion


def precision_convert(m):
    """lp matrix -> DDMatrix (exact) or DDMatrix -> lp matrix (rounded)."""
    if isinstance(m, DDMatrix):
        return m.to_lp()
    return DDMatrix.from_lp(m)


# ---------------------------------------------------------------------------
# triangle handling


def _masks(n_rows, n_cols, kind):
    r = np.arange(n_rows)[:, None]
    c = np.arange(n_cols)[None, :]
    if kind is TriangleKind.STRICT_LOWER:
        return r > c
    if kind is TriangleKind.UPPER:
        return r <= c
    if kind is TriangleKind.DIAGONAL:
        return r == c
    raise ValueError("unknown triangle kind %r" % (kind,))


def triangle_part(m, kind):
    """Copy of m with everything outside the selected triangle zeroed."""
    if isinstance(m, DDMatrix):
        mask = _masks(m.rows, m.cols, kind)
        return DDMatrix(*(np.where(mask, c, 0.0) for c in m.cells()))
    m = np.asarray(m)
    mask = _masks(m.shape[0], m.shape[1], kind)
    return np.asfortranarray(np.where(mask, m, 0.0 * m))


def stril_extract(m):
    """Split a square matrix into (E, T): E strictly lower, T the rest.

    Pure masking, no arithmetic, so E + T reassembles m bit for bit.
    """
    if isinstance(m, DDMatrix):
        if m.rows != m.cols:
            raise ValueError("stril_extract needs a square matrix")
        mask = _masks(m.rows, m.cols, TriangleKind.STRICT_LOWER)
        e = DDMatrix(*(np.where(mask, c, 0.0) for c in m.cells()))
        t = DDMatrix(*(np.where(mask, 0.0, c) for c in m.cells()))
        return e, t
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("stril_extract needs a square matrix")
    mask = _masks(m.shape[0], m.shape[1], TriangleKind.STRICT_LOWER)
    zero = np.zeros_like(m)
    e = np.asfortranarray(np.where(mask, m, zero))
    t = np.asfortranarray(np.where(mask, zero, m))
    return e, t


# ---------------------------------------------------------------------------
# norms


def _pairwise_dd_sum(hi, lo):
    # fixed pairwise reduction tree; an odd trailing element is carried to
    # the next level unchanged, so the tree depends only on the length
    while hi.size > 1:
        m = hi.size // 2
        nh, nl = v_add(hi[0:2 * m:2], lo[0:2 * m:2], hi[1:2 * m:2], lo[1:2 * m:2])
        if hi.size % 2:
            nh = np.append(nh, hi[-1])
            nl = np.append(nl, lo[-1])
        hi, lo = nh, nl
    return (hi[0], lo[0]) if hi.size else (0.0, 0.0)


def frobenius_norm(m):
    """Frobenius norm accumulated in double-double; returns a DDReal.

    Entry squares are summed over the column-major order through a fixed
    pairwise tree, so the value is identical under both kernel backends.
    """
    if isinstance(m, DDMatrix):
        rh = m.re_hi.ravel(order="F")
        rl = m.re_lo.ravel(order="F")
        ih = m.im_hi.ravel(order="F")
        il = m.im_lo.ravel(order="F")
    else:
        m = np.asarray(m)
        rh = np.ascontiguousarray(m.real.ravel(order="F"), dtype=np.float64)
        ih = np.ascontiguousarray(m.imag.ravel(order="F"), dtype=np.float64) \
            if np.iscomplexobj(m) else np.zeros(m.size)
        rl = np.zeros(m.size)
        il = np.zeros(m.size)
    sh, sl = v_mul(rh, rl, rh, rl)
    th, tl = v_mul(ih, il, ih, il)
    qh, ql = v_add(sh, sl, th, tl)
    hi, lo = _pairwise_dd_sum(qh, ql)
    return DDReal._raw(*dd.sqrt(hi, lo))
