import math
import random

import gmpy2
import mpmath
import pytest
from gmpy2 import mpc, mpfr

from modpoly.halfplane import (
    HalfPlanePoint,
    PrecisionPolicy,
    UnimodularMatrix,
    contour_extrema,
    delta,
    delta_any,
    e4,
    f_of,
    inverse_j_real,
    j_on_axis,
    j_value,
    reduce_to_F,
    rho_point,
    working,
)
from helpers import eval_j_qexp, j_qexp_coeffs

P = 256


def hp(re, im, prec=P):
    return HalfPlanePoint.make(re, im, prec)


def test_halfplane_point_rejects_lower_half():
    with pytest.raises(ValueError):
        hp(0, -1)
    with pytest.raises(ValueError):
        hp(0, 0)


def test_unimodular_matrix():
    with pytest.raises(ValueError):
        UnimodularMatrix(1, 1, 1, 1)
    s = UnimodularMatrix(0, -1, 1, 0)
    t = UnimodularMatrix(1, 1, 0, 1)
    assert s.compose(s.inverse()) == UnimodularMatrix.identity()
    with working(128):
        z = mpc(mpfr("0.3"), mpfr("0.7"))
        w = t.apply(s.apply(z))
        assert abs(t.compose(s).apply(z) - w) < mpfr(2) ** -100


def test_precision_policy_validation():
    with pytest.raises(ValueError):
        PrecisionPolicy(base_bits=32)
    with pytest.raises(ValueError):
        PrecisionPolicy(base_bits=128, retry_factor=1.0)
    pol = PrecisionPolicy(base_bits=100, retry_factor=2.0)
    assert pol.bits_for_attempt(2) == 400


# --- reduction ---------------------------------------------------------------


def test_reduce_translation():
    t, g = reduce_to_F(hp(5, 1))
    assert float(t.re) == 0 and float(t.im) == 1
    assert (g.m11, g.m12, g.m21, g.m22) == (1, -5, 0, 1)


def test_reduce_inversion():
    t, g = reduce_to_F(hp(0, 0.5))
    assert abs(float(t.im) - 2.0) < 1e-60
    assert (g.m11, g.m12, g.m21, g.m22) == (0, -1, 1, 0)


def test_reduce_corner_case():
    t, g = reduce_to_F(hp(0.5, 0.5))  # (1+i)/2 -> i
    assert abs(float(t.re)) < 1e-60 and abs(float(t.im) - 1) < 1e-60


def test_reduce_idempotent():
    rng = random.Random(5)
    for _ in range(20):
        t, _ = reduce_to_F(hp(rng.uniform(-30, 30), rng.uniform(0.001, 5)))
        t2, g2 = reduce_to_F(t)
        assert g2 == UnimodularMatrix.identity()
        assert t2.re == t.re and t2.im == t.im


def test_reduce_boundary_conventions():
    # |tau| = 1 with Re < 0 flips to Re > 0
    theta = 2 * math.pi / 3
    t, _ = reduce_to_F(hp(math.cos(theta), math.sin(theta)))
    assert float(t.re) >= 0
    # Re = -1/2 lands on +1/2
    t, _ = reduce_to_F(hp(-0.5, 2))
    assert float(t.re) == 0.5


def test_reduce_applies_matrix():
    rng = random.Random(6)
    with working(P):
        for _ in range(20):
            pt = hp(rng.uniform(-10, 10), rng.uniform(0.01, 3))
            t, g = reduce_to_F(pt)
            moved = g.apply(pt.to_mpc())
            assert abs(moved - t.to_mpc()) <= mpfr(2) ** -(P // 2)
            assert float(t.im) >= math.sqrt(3) / 2 - 1e-30
            assert -0.5 - 1e-30 < float(t.re) <= 0.5 + 1e-30


# --- special values ----------------------------------------------------------


def test_delta_rho_closed_form():
    # -3^3 Gamma(1/3)^36 / (2 pi)^24
    with working(P):
        got = delta(rho_point(P), P)
        pi = gmpy2.const_pi()
        want = -(3 ** 3) * gmpy2.gamma(mpfr(1) / 3) ** 36 / (2 * pi) ** 24
        assert abs(got - want) <= abs(want) * mpfr(2) ** -(P - 8)


def test_delta_i_closed_form():
    with working(P):
        got = delta(hp(0, 1), P)
        pi = gmpy2.const_pi()
        want = gmpy2.gamma(mpfr(1) / 4) ** 24 / (2 ** 24 * pi ** 18)
        assert abs(got - want) <= abs(want) * mpfr(2) ** -(P - 8)


def test_delta_i_hurwitz_integral():
    # Delta(i) = 2^18/(2 pi)^12 * (int_0^1 dt/sqrt(1-t^4))^12
    with mpmath.workprec(220):
        lem = mpmath.quad(lambda t: 1 / mpmath.sqrt(1 - t ** 4), [0, 1])
        want = mpmath.mpf(2) ** 18 / (2 * mpmath.pi) ** 12 * lem ** 12
        got = mpmath.mpf(str(delta(hp(0, 1), 220).real))
        assert abs(got - want) < mpmath.mpf(10) ** -30


def test_delta_agrees_with_theta_route():
    from modpoly.halfplane import _delta_e4_at

    rng = random.Random(11)
    with working(P):
        for _ in range(10):
            pt = hp(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 3))
            d1 = delta(pt, P)
            d2, _ = _delta_e4_at(pt.to_mpc(), P)
            assert abs(d1 - d2) <= abs(d1) * mpfr(2) ** -(P - 10)


def test_delta_rejects_low_points():
    with pytest.raises(ValueError):
        delta(hp(0, 0.2), P)


def test_j_special_values():
    with working(P):
        assert abs(j_value(rho_point(P), P)) <= mpfr(2) ** -(P - 16)
        assert abs(j_value(hp(0, 1), P) - 1728) <= mpfr(2) ** -(P - 24) * 1728
        j2 = j_value(hp(0, 2), P)
        assert abs(j2 - 287496) <= mpfr(2) ** -(P - 24) * 287496
        assert abs(j_on_axis(2, P) - 287496) <= mpfr(2) ** -(P - 24) * 287496


def test_j_qexpansion_coefficients():
    coeffs = j_qexp_coeffs(8)
    assert coeffs[0] == 1
    assert coeffs[1] == 744
    assert coeffs[2] == 196884
    assert coeffs[3] == 21493760


def test_j_matches_integer_qexpansion():
    # design check: E4^3/Delta against the direct q-expansion, 20 random points
    coeffs = j_qexp_coeffs(48)
    rng = random.Random(17)
    with working(160):
        for _ in range(20):
            re = rng.uniform(-0.5, 0.5)
            im = rng.uniform(0.9, 2.0)
            got = j_value(hp(re, im, 160), 160)
            want = eval_j_qexp(re, im, coeffs, 160)
            scale = max(mpfr(1), abs(want))
            assert abs(got - want) <= scale * mpfr(2) ** -80


def test_j_matches_mpmath_kleinj():
    rng = random.Random(23)
    with mpmath.workprec(120):
        for _ in range(10):
            re = rng.uniform(-0.5, 0.5)
            im = rng.uniform(0.8, 2.5)
            want = mpmath.kleinj(mpmath.mpc(re, im)) * 1728
            got = j_value(hp(re, im, 128), 128)
            err = abs(complex(got) - complex(want))
            assert err <= 1e-20 * max(1.0, abs(complex(want)))


def test_sl2_invariance_of_j():
    rng = random.Random(31)
    with working(P):
        for _ in range(100):
            pt = hp(rng.uniform(-2, 2), rng.uniform(0.05, 3))
            g = _random_sl2(rng, 50)
            moved = g.apply(pt.to_mpc())
            j1 = j_value(pt, P)
            j2 = j_value(HalfPlanePoint.from_mpc(moved, P), P)
            assert abs(j1 - j2) <= mpfr(2) ** -(P // 2) * max(mpfr(1), abs(j1))


def _random_sl2(rng, size):
    # random word in S, T keeps entries modest and determinant exactly 1
    g = UnimodularMatrix.identity()
    s = UnimodularMatrix(0, -1, 1, 0)
    while True:
        for _ in range(rng.randint(1, 6)):
            if rng.random() < 0.5:
                g = g.compose(s)
            else:
                n = rng.randint(-3, 3)
                g = g.compose(UnimodularMatrix(1, n, 0, 1))
        if max(abs(g.m11), abs(g.m12), abs(g.m21), abs(g.m22)) <= size:
            return g
        g = UnimodularMatrix.identity()


def test_delta_weight_12():
    rng = random.Random(37)
    with working(P):
        for _ in range(30):
            pt = hp(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.5))
            g = _random_sl2(rng, 50)
            z = pt.to_mpc()
            moved = g.apply(z)
            lhs = delta_any(HalfPlanePoint.from_mpc(moved, P), P)
            rhs = g.cocycle(z) ** 12 * delta(pt, P)
            assert abs(lhs - rhs) <= abs(rhs) * mpfr(2) ** -(P // 2)


def test_delta_im6_invariant():
    # |Delta(tau)| (Im tau)^6 is SL2-invariant
    rng = random.Random(41)
    with working(P):
        for _ in range(30):
            pt = hp(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2.5))
            g = _random_sl2(rng, 50)
            moved = g.apply(pt.to_mpc())
            a = abs(delta(pt, P)) * pt.im ** 6
            b = abs(delta_any(HalfPlanePoint.from_mpc(moved, P), P)) * moved.imag ** 6
            assert abs(a - b) <= a * mpfr(2) ** -(P // 2)


def test_f_values():
    with working(P):
        pi = gmpy2.const_pi()
        f_i = f_of(hp(0, 1), P)
        closed = gmpy2.log(3 ** 3 * gmpy2.gamma(mpfr(1) / 4) ** 24 / (2 ** 18 * pi ** 18))
        assert abs(f_i - closed) <= mpfr(2) ** -(P // 2)
        assert float(f_i) < 1.1266
        f_rho = f_of(rho_point(P), P)
        want = gmpy2.log((3 ** 3) * gmpy2.gamma(mpfr(1) / 3) ** 36 / (2 * pi) ** 24)
        assert abs(f_rho - want) <= mpfr(2) ** -(P // 2)
        assert float(f_rho) == pytest.approx(-5.3380694384, abs=1e-9)


def test_f_decays_at_cusp():
    with working(1400):
        v = f_of(HalfPlanePoint.make(0, 100, 1400), 1400)
        assert abs(v) < mpfr(10) ** -250


def test_precision_doubling_consistency():
    rng = random.Random(43)
    for _ in range(8):
        pt_re, pt_im = rng.uniform(-0.5, 0.5), rng.uniform(0.9, 2)
        for fn in (lambda pt, p: delta(pt, p), lambda pt, p: j_value(pt, p),
                   lambda pt, p: f_of(pt, p)):
            with working(2 * P):
                a = fn(hp(pt_re, pt_im, P), P)
                b = fn(hp(pt_re, pt_im, 2 * P), 2 * P)
                assert abs(a - b) <= max(mpfr(1), abs(b)) * mpfr(2) ** -(P // 2)


def test_inverse_j_real_branches():
    with working(P):
        t = inverse_j_real(0, P)
        r = rho_point(P)
        assert t.re == r.re and t.im == r.im
        t = inverse_j_real(1728, P)
        assert abs(t.re) < 1e-30 and abs(float(t.im) - 1) < 1e-20
        t = inverse_j_real(287496, P)
        assert abs(t.re) < 1e-30 and abs(float(t.im) - 2) < 1e-20
        for j0 in (-1, -12345.5, 3.7, 500, 1729, 10 ** 8):
            t = inverse_j_real(j0, P)
            err = abs(j_value(t, P) - mpfr(j0))
            assert err <= mpfr(2) ** -(P // 2) * max(mpfr(1), abs(mpfr(j0)))


def test_window_bound_and_endpoint():
    # -log[|Delta(iy)| y^6] <= 6.5296 on [1, 1.2536]; j at the ends
    with working(P):
        worst = mpfr("-inf")
        for i in range(400 + 1):
            y = 1 + mpfr("0.2536") * i / 400
            val = -gmpy2.log(abs(delta(HalfPlanePoint(mpfr(0), y, P), P)) * y ** 6)
            worst = max(worst, val)
        assert float(worst) <= 6.5296
        assert float(worst) == pytest.approx(6.52959, abs=2e-4)
        assert float(j_on_axis(1, P)) == pytest.approx(1728, abs=1e-20)
        j_end = float(j_on_axis(mpfr("1.2536"), P))
        assert 3450 < j_end < 3460  # so the inverse of 3456 sits below 1.2536
        y_3456 = inverse_j_real(3456, P)
        assert float(y_3456.im) < 1.2536


def test_e4_value():
    with working(P):
        v = e4(hp(0, 1), P)
        # E4(i) = 3 (Gamma(1/4)^8 / (2 pi)^6) -- check via j = E4^3/Delta = 1728
        d = delta(hp(0, 1), P)
        assert abs(v ** 3 / d - 1728) < mpfr(2) ** -(P - 24) * 1728


def test_contour_extrema_small_density():
    vmin, argmin, vmax, argmax = contour_extrema(10 ** 3, 128)
    assert vmax == pytest.approx(1.1265902634, abs=5e-7)
    assert float(argmax.re) == pytest.approx(0.0, abs=1e-3)
    assert float(argmax.im) == pytest.approx(1.0, abs=1e-3)
    assert -5.5335 < vmin <= -5.5330
    assert float(argmin.re) == pytest.approx(0.5, abs=1e-6)
    assert float(argmin.im) == pytest.approx(0.894443, abs=1e-3)


def test_contour_density_consistency():
    vmin1, _, vmax1, _ = contour_extrema(10 ** 3, 96)
    vmin2, _, vmax2, _ = contour_extrema(3 * 10 ** 3, 96)
    assert abs(vmin1 - vmin2) < 1e-3
    assert abs(vmax1 - vmax2) < 1e-3


def test_contour_rejects_coarse_grid():
    with pytest.raises(ValueError):
        contour_extrema(100, 96)
