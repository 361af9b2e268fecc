"""Double-double scalar arithmetic tests.

The exact oracle for add/mul/div is fractions.Fraction (binary64 values
embed exactly, so sums/products/quotients of pairs are exact rationals);
square roots are checked through the exact residual r*r - a.  mpmath at
50 digits pins the frozen decimal examples.
"""

import math
import random
from fractions import Fraction

import mpmath
import pytest

from ddschur import DDComplex, DDReal, dd, hp_to_lp, lp_to_hp

U_HP = Fraction(1, 2 ** 106)
REL_BOUND = 16 * U_HP

mpmath.mp.dps = 50


def to_fraction(hi, lo):
    return Fraction(hi) + Fraction(lo)


def is_normalized(hi, lo):
    s, e = dd.two_sum(hi, lo)
    return s == hi and e == lo


def random_pair(rng, exp_range=20):
    """Normalized pair with a fully populated lo cell."""
    hi = rng.uniform(-1.0, 1.0) * 2.0 ** rng.randint(-exp_range, exp_range)
    lo = hi * (rng.random() - 0.5) * 2.0 ** -52
    return dd.two_sum(hi, lo)


# ---------------------------------------------------------------------------
# exact identities


def test_add_exact_small_integers():
    assert DDReal(1.0) + DDReal(2.0) == DDReal(3.0)
    a = DDReal(7.25)
    assert a + DDReal(0.0) == a


def test_mul_exact_small_integers():
    assert DDReal(3.0) * DDReal(4.0) == DDReal(12.0)
    a = DDReal(0.1)
    assert a * DDReal(1.0) == a


def test_sqrt_exact_square():
    assert DDReal(4.0).sqrt() == DDReal(2.0)
    assert DDReal(0.0).sqrt() == DDReal(0.0)


def test_conversion_round_trips():
    x = 0.1
    h = lp_to_hp(x)
    assert h.hi == x and h.lo == 0.0
    rng = random.Random(7)
    for _ in range(1000):
        v = rng.uniform(-1.0, 1.0) * 2.0 ** rng.randint(-300, 300)
        assert hp_to_lp(lp_to_hp(v)) == v
    assert hp_to_lp(DDReal(1.0, 2.0 ** -60)) == 1.0


def test_conj_product_is_real():
    z = DDComplex(DDReal(1.5, 2.0 ** -60), DDReal(-0.75, 2.0 ** -70))
    p = z.conj() * z
    # the imaginary cross terms cancel by construction, not just to rounding
    assert p.im.hi == 0.0 and p.im.lo == 0.0
    assert p.re.hi > 0.0


# ---------------------------------------------------------------------------
# frozen derived values (oracle: mpmath at 50 digits)


def test_add_keeps_tiny_tail():
    r = DDReal(1.0) + DDReal(2.0 ** -80)
    assert (r.hi, r.lo) == (1.0, 2.0 ** -80)
    oracle = mpmath.mpf(1) + mpmath.mpf(2) ** -80
    got = mpmath.mpf(r.hi) + mpmath.mpf(r.lo)
    assert got == oracle


def test_mul_keeps_lo_lo_cross_term():
    a = DDReal(1.0, 2.0 ** -60)
    b = DDReal(1.0, -(2.0 ** -60))
    r = a * b
    # exact value 1 - 2**-120 is representable as a pair
    assert (r.hi, r.lo) == (1.0, -(2.0 ** -120))


def test_div_one_third():
    r = DDReal(1.0) / DDReal(3.0)
    # frozen: correctly rounded pair for 1/3
    assert r.hi == float.fromhex("0x1.5555555555555p-2")
    assert r.lo == float.fromhex("0x1.5555555555555p-56")
    assert r.to_string()[:34] == "0.33333333333333333333333333333333"
    oracle = mpmath.mpf(1) / 3
    got = mpmath.mpf(r.hi) + mpmath.mpf(r.lo)
    assert abs(got - oracle) / oracle < 16 * mpmath.mpf(2) ** -106


def test_sqrt_two():
    r = DDReal(2.0).sqrt()
    # frozen: one Newton correction lands within u_hp of sqrt(2)
    assert r.hi == float.fromhex("0x1.6a09e667f3bcdp+0")
    assert r.lo == float.fromhex("-0x1.bdd3413b26455p-54")
    oracle = mpmath.sqrt(mpmath.mpf(2))
    got = mpmath.mpf(r.hi) + mpmath.mpf(r.lo)
    assert abs(got - oracle) / oracle < 16 * mpmath.mpf(2) ** -106


# ---------------------------------------------------------------------------
# randomized properties


def test_random_relative_error_add_mul_div_sqrt():
    rng = random.Random(20260816)
    n_samples = 100_000
    for i in range(n_samples):
        ahi, alo = random_pair(rng)
        if i % 4 == 0:
            # cancellation-heavy additions stress the accurate-add path
            bhi = -ahi * (1.0 + (rng.random() - 0.5) * 2.0 ** -40)
            blo = -alo
            bhi, blo = dd.two_sum(bhi, blo)
        else:
            bhi, blo = random_pair(rng)

        fa = to_fraction(ahi, alo)
        fb = to_fraction(bhi, blo)

        rh, rl = dd.add(ahi, alo, bhi, blo)
        assert is_normalized(rh, rl)
        exact = fa + fb
        if exact != 0:
            assert abs(to_fraction(rh, rl) - exact) <= REL_BOUND * abs(exact)
        # commutative bit for bit
        assert (rh, rl) == dd.add(bhi, blo, ahi, alo)

        rh, rl = dd.mul(ahi, alo, bhi, blo)
        assert is_normalized(rh, rl)
        exact = fa * fb
        if exact != 0:
            assert abs(to_fraction(rh, rl) - exact) <= REL_BOUND * abs(exact)
        assert (rh, rl) == dd.mul(bhi, blo, ahi, alo)

        rh, rl = dd.div(ahi, alo, bhi, blo)
        assert is_normalized(rh, rl)
        exact = fa / fb
        assert abs(to_fraction(rh, rl) - exact) <= REL_BOUND * abs(exact)

        # sqrt via the exact residual: |r - sqrt(a)| / sqrt(a) equals
        # |r*r - a| / (a * (1 + r/sqrt(a))), and r/sqrt(a) = 1 + O(u_hp)
        sh, sl = dd.sqrt(abs(ahi), alo if ahi >= 0 else -alo)
        assert is_normalized(sh, sl)
        fs = to_fraction(sh, sl)
        fabs_a = abs(fa)
        assert abs(fs * fs - fabs_a) <= 2 * (REL_BOUND + REL_BOUND ** 2) * fabs_a


def test_exact_integer_products():
    rng = random.Random(99)
    for _ in range(10_000):
        a = rng.randint(-(2 ** 50) + 1, 2 ** 50 - 1)
        b = rng.randint(-(2 ** 50) + 1, 2 ** 50 - 1)
        r = DDReal.from_int(a) * DDReal.from_int(b)
        assert to_fraction(r.hi, r.lo) == a * b


def test_from_int_exact_and_overflowing():
    f20 = math.factorial(20)
    d = DDReal.from_int(f20)
    assert int(d.hi) + int(d.lo) == f20
    d = DDReal.from_int(2 ** 105 + 1)
    assert to_fraction(d.hi, d.lo) == 2 ** 105 + 1
    with pytest.raises(ValueError):
        DDReal.from_int(2 ** 120 + 2 ** 60 + 1)


def test_string_round_trip_is_bitwise():
    rng = random.Random(4242)
    for _ in range(1000):
        hi, lo = random_pair(rng, exp_range=60)
        x = DDReal(hi, lo)
        y = DDReal.from_string(x.to_string())
        assert (y.hi, y.lo) == (x.hi, x.lo)


def test_domain_errors():
    with pytest.raises(ZeroDivisionError):
        DDReal(1.0) / DDReal(0.0)
    with pytest.raises(ValueError):
        DDReal(-4.0).sqrt()
    with pytest.raises(ZeroDivisionError):
        DDComplex(1.0, 1.0) / DDComplex(0.0, 0.0)


def test_nonfinite_propagates_without_raising():
    r = DDReal(1e308) * DDReal(1e308)
    assert not r.is_finite()


def test_complex_arithmetic_against_mpmath():
    rng = random.Random(5)
    for _ in range(200):
        a = DDComplex(DDReal(*random_pair(rng)), DDReal(*random_pair(rng)))
        b = DDComplex(DDReal(*random_pair(rng)), DDReal(*random_pair(rng)))
        ma = mpmath.mpc(mpmath.mpf(a.re.hi) + mpmath.mpf(a.re.lo),
                        mpmath.mpf(a.im.hi) + mpmath.mpf(a.im.lo))
        mb = mpmath.mpc(mpmath.mpf(b.re.hi) + mpmath.mpf(b.re.lo),
                        mpmath.mpf(b.im.hi) + mpmath.mpf(b.im.lo))
        for got, want in (
            (a + b, ma + mb),
            (a - b, ma - mb),
            (a * b, ma * mb),
            (a / b, ma / mb),
        ):
            g = mpmath.mpc(mpmath.mpf(got.re.hi) + mpmath.mpf(got.re.lo),
                           mpmath.mpf(got.im.hi) + mpmath.mpf(got.im.lo))
            assert abs(g - want) <= 32 * mpmath.mpf(2) ** -106 * abs(want)


def test_rounding_mode_check_runs():
    dd._assert_round_to_nearest_even()
