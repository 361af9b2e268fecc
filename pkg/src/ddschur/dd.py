"""Double-double scalar arithmetic.

A value is an unevaluated sum of two binary64 cells ``hi + lo``, normalized
so that ``hi = fl(hi + lo)``; the working unit roundoff of the pair format is
``u_hp = 2**-106``.  The flat functions at the top operate on the raw cells
and are the only arithmetic the matrix kernels touch, so a different cell
scheme could be slotted in behind the same names.  The :class:`DDReal` and
:class:`DDComplex` wrappers add operators, decimal rendering and domain
checks for scalar callers.

Everything here assumes round-to-nearest-even binary64 arithmetic; that is
checked once at import and the module refuses to load without it.
"""

import math
from decimal import Decimal, localcontext

from .backend import scalar_jit

U_HP = 2.0 ** -106
U_LP = 2.0 ** -53

# Dekker splitter, 2**27 + 1.  No fused multiply-add anywhere: numpy has no
# elementwise fma, and using one only in the compiled backend would break
# bit identity between backends.
_SPLITTER = 134217729.0


def _assert_round_to_nearest_even():
    # Directed rounding or double-rounding through x87 would invalidate
    # every error-free transformation below, so fail loudly and early.
    a = 2.0 ** 53
    ok = (
        a + 1.0 == a            # tie rounds down to the even significand
        and a + 3.0 == a + 4.0  # tie rounds up to the even significand
        and 1.0 + 2.0 ** -53 == 1.0
        and 1.0 + 2.0 ** -52 > 1.0
    )
    if not ok:
        raise RuntimeError(
            "binary64 arithmetic is not round-to-nearest-even; "
            "double-double arithmetic would be silently wrong"
        )


_assert_round_to_nearest_even()


# ---------------------------------------------------------------------------
# Error-free transformations on binary64 cells.


@scalar_jit
def two_sum(a, b):
    """s, e with s = fl(a+b) and s + e = a + b exactly (any ordering)."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


@scalar_jit
def quick_two_sum(a, b):
    """two_sum under the promise |a| >= |b| (3 flops instead of 6)."""
    s = a + b
    e = b - (s - a)
    return s, e


@scalar_jit
def split(a):
    """Dekker split of a into 26+26 significant bits, a = hi + lo exactly."""
    t = _SPLITTER * a
    hi = t - (t - a)
    lo = a - hi
    return hi, lo


@scalar_jit
def two_prod(a, b):
    """p, e with p = fl(a*b) and p + e = a*b exactly."""
    p = a * b
    ahi, alo = split(a)
    bhi, blo = split(b)
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


# ---------------------------------------------------------------------------
# Double-double operations on raw (hi, lo) cells.  All of them return
# normalized pairs given normalized, finite inputs; overflow propagates as
# inf/nan without raising.  Division by an exact zero and roots of negative
# values are guarded at the DDReal level, not here.


@scalar_jit
def add(ahi, alo, bhi, blo):
    """Accurate pair sum, relative error <= 3*U_HP even under cancellation."""
    s1, s2 = two_sum(ahi, bhi)
    t1, t2 = two_sum(alo, blo)
    s2 += t1
    s1, s2 = quick_two_sum(s1, s2)
    s2 += t2
    return quick_two_sum(s1, s2)


@scalar_jit
def sub(ahi, alo, bhi, blo):
    s1, s2 = two_sum(ahi, -bhi)
    t1, t2 = two_sum(alo, -blo)
    s2 += t1
    s1, s2 = quick_two_sum(s1, s2)
    s2 += t2
    return quick_two_sum(s1, s2)


@scalar_jit
def mul(ahi, alo, bhi, blo):
    """Pair product.  Keeps the lo*lo term so nearly-cancelling cross terms
    still land in the result (costs one multiply, tightens the bound)."""
    p, e = two_prod(ahi, bhi)
    cross = ahi * blo + alo * bhi
    e += cross + alo * blo
    return quick_two_sum(p, e)


@scalar_jit
def mul_d(ahi, alo, b):
    """Pair times plain binary64."""
    p, e = two_prod(ahi, b)
    e += alo * b
    return quick_two_sum(p, e)


@scalar_jit
def div(ahi, alo, bhi, blo):
    """Three-quotient long division; relative error a few U_HP."""
    q1 = ahi / bhi
    th, tl = mul_d(bhi, blo, q1)
    rh, rl = sub(ahi, alo, th, tl)
    q2 = rh / bhi
    th, tl = mul_d(bhi, blo, q2)
    rh, rl = sub(rh, rl, th, tl)
    q3 = rh / bhi
    s, e = quick_two_sum(q1, q2)
    return quick_two_sum(s, e + q3)


@scalar_jit
def sqrt(ahi, alo):
    """Pair square root by one correction of the binary64 root.

    The caller guarantees a >= 0; a negative hi cell yields nan rather than
    raising so the compiled and interpreted backends agree.
    """
    if ahi == 0.0:
        return 0.0, 0.0
    if ahi < 0.0:
        return math.nan, math.nan
    r = math.sqrt(ahi)
    sh, sl = two_prod(r, r)
    dh, dl = sub(ahi, alo, sh, sl)
    corr = dh / (2.0 * r)
    return quick_two_sum(r, corr)


@scalar_jit
def cmul(arh, arl, aih, ail, brh, brl, bih, bil):
    """Complex pair product (ar + i*ai)(br + i*bi).

    Four real pair products combined in a fixed sequence; the array kernels
    replay exactly this order so the backends agree bit for bit.
    """
    ph, pl = mul(arh, arl, brh, brl)
    qh, ql = mul(aih, ail, bih, bil)
    reh, rel = sub(ph, pl, qh, ql)
    sh, sl = mul(arh, arl, bih, bil)
    th, tl = mul(aih, ail, brh, brl)
    imh, iml = add(sh, sl, th, tl)
    return reh, rel, imh, iml


# ---------------------------------------------------------------------------
# Scalar wrapper types.


class DDReal:
    """A double-double real scalar.

    Arithmetic with other DDReal values, ints and floats keeps pair
    precision.  ``float(x)`` rounds to binary64 (which is just ``hi`` by the
    normalization invariant); :meth:`to_string` renders 36 significant
    decimal digits, enough to round-trip any value at the 106-bit working
    precision of the format.
    """

    __slots__ = ("hi", "lo")

    def __init__(self, hi=0.0, lo=0.0):
        h, l = two_sum(float(hi), float(lo))
        self.hi = h
        self.lo = l

    @classmethod
    def _raw(cls, hi, lo):
        # trusted constructor: pair already normalized
        obj = cls.__new__(cls)
        obj.hi = hi
        obj.lo = lo
        return obj

    @classmethod
    def from_int(cls, value):
        """Exact conversion of any integer with |value| < 2**106."""
        hi = float(value)
        lo = float(value - int(hi))
        if int(hi) + int(lo) != value:
            raise ValueError("integer %d does not fit in a double-double" % value)
        return cls._raw(*quick_two_sum(hi, lo))

    @classmethod
    def from_string(cls, text):
        """Parse a decimal string to the nearest pair."""
        with localcontext() as ctx:
            ctx.prec = 80
            d = Decimal(text)
            hi = float(d)
            lo = float(d - Decimal(hi))
        return cls._raw(*two_sum(hi, lo))

    def to_string(self, digits=36):
        """Round-trippable decimal rendering with 36 significant digits.

        Components more than 36 orders of magnitude below hi are not
        representable in the string; values produced by pair arithmetic
        never carry information that deep.
        """
        with localcontext() as ctx:
            ctx.prec = digits
            d = Decimal(self.hi) + Decimal(self.lo)
        return str(d)

    def is_finite(self):
        return math.isfinite(self.hi) and math.isfinite(self.lo)

    @staticmethod
    def _coerce(other):
        if isinstance(other, DDReal):
            return other
        if isinstance(other, float):
            return DDReal._raw(other, 0.0)
        if isinstance(other, int):
            return DDReal.from_int(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DDReal._raw(*add(self.hi, self.lo, o.hi, o.lo))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DDReal._raw(*sub(self.hi, self.lo, o.hi, o.lo))

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DDReal._raw(*sub(o.hi, o.lo, self.hi, self.lo))

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DDReal._raw(*mul(self.hi, self.lo, o.hi, o.lo))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.hi == 0.0 and o.lo == 0.0:
            raise ZeroDivisionError("double-double division by zero")
        return DDReal._raw(*div(self.hi, self.lo, o.hi, o.lo))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __neg__(self):
        return DDReal._raw(-self.hi, -self.lo)

    def __abs__(self):
        return -self if self.hi < 0.0 else DDReal._raw(self.hi, self.lo)

    def sqrt(self):
        if self.hi < 0.0:
            raise ValueError("square root of a negative double-double")
        return DDReal._raw(*sqrt(self.hi, self.lo))

    def __float__(self):
        return float(self.hi)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.hi == o.hi and self.lo == o.lo

    def __lt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = sub(self.hi, self.lo, o.hi, o.lo)
        return d[0] < 0.0

    def __le__(self, other):
        return self == other or self < other

    def __gt__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = sub(self.hi, self.lo, o.hi, o.lo)
        return d[0] > 0.0

    def __ge__(self, other):
        return self == other or self > other

    def __hash__(self):
        return hash((self.hi, self.lo))

    def __repr__(self):
        return "DDReal(%r, %r)" % (self.hi, self.lo)

    def __str__(self):
        return self.to_string()


class DDComplex:
    """A complex scalar with double-double real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0.0, im=0.0):
        self.re = re if isinstance(re, DDReal) else DDReal(re)
        self.im = im if isinstance(im, DDReal) else DDReal(im)

    @staticmethod
    def _coerce(other):
        if isinstance(other, DDComplex):
            return other
        if isinstance(other, complex):
            return DDComplex(DDReal._raw(other.real, 0.0), DDReal._raw(other.imag, 0.0))
        r = DDReal._coerce(other)
        if r is None:
            return None
        return DDComplex(r, DDReal._raw(0.0, 0.0))

    def conj(self):
        return DDComplex(self.re, -self.im)

    def abs(self):
        """Modulus as a DDReal; |x|^2 is assembled from real parts only, so
        the imaginary part never leaks rounding into it."""
        return (self.re * self.re + self.im * self.im).sqrt()

    def __abs__(self):
        return float(self.abs())

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DDComplex(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DDComplex(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return DDComplex(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        rh, rl, ih, il = cmul(
            self.re.hi, self.re.lo, self.im.hi, self.im.lo,
            o.re.hi, o.re.lo, o.im.hi, o.im.lo,
        )
        return DDComplex(DDReal._raw(rh, rl), DDReal._raw(ih, il))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den.hi == 0.0:
            raise ZeroDivisionError("double-double complex division by zero")
        num = self * o.conj()
        return DDComplex(num.re / den, num.im / den)

    def __neg__(self):
        return DDComplex(-self.re, -self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(self.re.hi, self.im.hi)

    def __repr__(self):
        return "DDComplex(%r, %r)" % (self.re, self.im)


# ---------------------------------------------------------------------------
# Spec-level entry points.


def dd_add(a: DDReal, b: DDReal) -> DDReal:
    return a + b


def dd_sub(a: DDReal, b: DDReal) -> DDReal:
    return a - b


def dd_mul(a: DDReal, b: DDReal) -> DDReal:
    return a * b


def dd_div(a: DDReal, b: DDReal) -> DDReal:
    return a / b


def dd_sqrt(a: DDReal) -> DDReal:
    return a.sqrt()


def lp_to_hp(x: float) -> DDReal:
    """Exact embedding of a binary64 value (lo cell is zero)."""
    return DDReal._raw(float(x), 0.0)


def hp_to_lp(x: DDReal) -> float:
    """Round to binary64; by normalization this is just the hi cell."""
    return x.hi
