"""Hecke orbits, Mahler-measure sums, Farey intervals, and the hat-tau device.

The orbit of tau under C_N is always traversed in lexicographic (d, b)
order so that every sum over C_N is bit-reproducible at fixed precision.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple

import gmpy2
from gmpy2 import mpc, mpfr

from .arith import IsogenyMatrix, enumerate_CN, lambda_vector, psi, LogPrimeVector
from .halfplane import (
    HalfPlanePoint,
    UnimodularMatrix,
    _delta_e4_at,
    _j_from_mpc_reduced,
    _reduce_raw,
    delta_any,
    working,
)
from .report import BoundReport


@dataclass(frozen=True)
class OrbitPoint:
    gamma: IsogenyMatrix
    tau_gamma: HalfPlanePoint
    tau_reduced: HalfPlanePoint
    reducer: UnimodularMatrix


@dataclass(frozen=True)
class HeckeOrbit:
    """The psi(N) points (a tau + b)/d together with their reductions."""

    N: int
    tau: HalfPlanePoint
    points: Tuple[OrbitPoint, ...]


def build_orbit(N: int, tau: HalfPlanePoint, P: int) -> HeckeOrbit:
    """Compute and reduce every tau_gamma = (a tau + b)/d, in (d, b) order."""
    pts = []
    with working(P):
        x0, y0 = mpfr(tau.re), mpfr(tau.im)
        for g in enumerate_CN(N):
            xg = (g.a * x0 + g.b) / g.d
            yg = g.a * y0 / g.d
            xr, yr, m = _reduce_raw(xg, yg, P)
            pts.append(OrbitPoint(
                g,
                HalfPlanePoint(xg, yg, P),
                HalfPlanePoint(xr, yr, P),
                UnimodularMatrix(*m),
            ))
    return HeckeOrbit(N, tau, tuple(pts))


def s_N(N: int, tau: HalfPlanePoint, P: int, orbit: HeckeOrbit | None = None) -> mpfr:
    """S_N(tau) = sum over C_N of log max(1, |j(tau_gamma)|).

    j is evaluated at the reduced representatives (same value, stable
    series); summation follows the fixed orbit order.
    """
    if orbit is None:
        orbit = build_orbit(N, tau, P)
    with working(P):
        total = mpfr(0)
        one = mpfr(1)
        for pt in orbit.points:
            jv = abs(_j_from_mpc_reduced(pt.tau_reduced.to_mpc(), P))
            if jv > one:
                total += gmpy2.log(jv)
        return total


def sn_decomposition_check(N: int, tau: HalfPlanePoint, P: int) -> BoundReport:
    """Evaluate both sides of the S_N(tau) unfolding identity independently.

    Left: the defining sum of log max(1, |j(tau_gamma)|).  Right:
    sum log max(|Delta(t~)|, |j Delta(t~)|) + 6 sum [log Im t~ - log Im t]
    - psi(N) log |Delta(tau)|.  Reports |lhs - rhs| against 0.
    """
    orbit = build_orbit(N, tau, P)
    with working(P):
        lhs = s_N(N, tau, P, orbit)
        total = mpfr(0)
        for pt in orbit.points:
            z = pt.tau_reduced.to_mpc()
            d, ee4 = _delta_e4_at(z, P)
            total += max(gmpy2.log(abs(d)), 3 * gmpy2.log(abs(ee4)))
            total += 6 * (gmpy2.log(pt.tau_reduced.im) - gmpy2.log(pt.tau_gamma.im))
        dt = delta_any(tau, P)
        rhs = total - psi(N) * gmpy2.log(abs(dt))
        disc = abs(lhs - rhs)
    rep = BoundReport.from_sides(
        "sn_decomposition", N, disc, 0, P,
        context={"tau": (float(tau.re), float(tau.im)), "S_N": float(lhs)},
    )
    return rep


# ---------------------------------------------------------------------------
# Farey intervals


@dataclass(frozen=True)
class FareyInterval:
    """Mediant-bounded interval [lo, hi) around the order-M fraction h/k."""

    h: int
    k: int
    lo: Fraction
    hi: Fraction

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x < self.hi


def _farey_sequence(M: int) -> List[Tuple[int, int]]:
    """Farey fractions of order M in [0, 1], plus the successor (M+1)/M of 1/1."""
    seq = [(0, 1), (1, M)]
    a, b, c, d = 0, 1, 1, M
    while c <= M and not (c == 1 and d == 1):
        k = (M + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
        seq.append((c, d))
    seq.append((M + 1, M))
    return seq


@lru_cache(maxsize=None)
def farey_intervals(M: int) -> Tuple[FareyInterval, ...]:
    """The mediant partition of [1/(M+1), (M+2)/(M+1)) by order-M fractions.

    For consecutive Farey neighbors the mediant sits at distance
    1/(k (k + k')) from h/k with M + 1 <= k + k' <= 2M, which is exactly
    the two-sided 1/(2Mk) .. 1/((M+1)k) guarantee.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    seq = _farey_sequence(M)
    out = []
    for i in range(1, len(seq) - 1):
        hp_, kp = seq[i - 1]
        h, k = seq[i]
        hn, kn = seq[i + 1]
        lo = Fraction(hp_ + h, kp + k)
        hi = Fraction(h + hn, k + kn)
        out.append(FareyInterval(h, k, lo, hi))
    return tuple(out)


@lru_cache(maxsize=None)
def _farey_lower_bounds(M: int) -> List[Fraction]:
    return [iv.lo for iv in farey_intervals(M)]


def _floor_sqrt_ratio(num: int, den: int) -> int:
    """floor(sqrt(num/den)) for positive integers, exactly."""
    m = math.isqrt(num // den)
    while (m + 1) * (m + 1) * den <= num:
        m += 1
    while m * m * den > num:
        m -= 1
    return m


def hat_tau(N: int, y, gamma: IsogenyMatrix, P: int) -> Tuple[HalfPlanePoint, int]:
    """The approximate representative tau-hat of (a iy + b)/d for large d.

    Requires d >= sqrt(N y) so that M = floor(d / sqrt(N y)) >= 1.  When
    b/d < 1/(M+1), b is replaced by b+d (a unit translation of the
    orbit point).  delta = (s r; k -h) is built from the order-M Farey
    fraction h/k whose interval contains b/d, with s h + r k = -1 and
    |s| minimal, then adjusted by an integer translation so that
    Re tau-hat lies in (-1/2, 1/2].  Returns (tau_hat, k).
    """
    yq = Fraction(y)
    if yq < 1:
        raise ValueError("y must be >= 1")
    a, b, d = gamma.a, gamma.b, gamma.d
    N_check = a * d
    if N_check != N:
        raise ValueError("gamma does not have determinant N")
    M = _floor_sqrt_ratio(d * d * yq.denominator, N * yq.numerator)
    if M < 1:
        raise ValueError("hat_tau needs d >= sqrt(N y)")
    bq = Fraction(b, d)
    if bq < Fraction(1, M + 1):
        b = b + d
        bq = Fraction(b, d)
    ivs = farey_intervals(M)
    idx = bisect_right(_farey_lower_bounds(M), bq) - 1
    iv = ivs[idx]
    if not iv.contains(bq):
        raise AssertionError("Farey interval lookup failed")
    h, k = iv.h, iv.k
    # s h + r k = -1 with |s| minimal: s = -h^(-1) mod k, representative in (-k/2, k/2]
    _, s0, _ = _ext_gcd(h, k)
    s = (-s0) % k
    if 2 * s > k:
        s -= k
    r, rem = divmod(-1 - s * h, k)
    assert rem == 0
    with working(P):
        yv = mpfr(yq.numerator) / yq.denominator
        z = mpc(mpfr(b) / d, mpfr(a) * yv / d)
        num = s * z + r
        den = k * z - h
        w = num / den
        n = int(gmpy2.ceil(w.real - mpfr(1) / 2))
        w = w - n
    return HalfPlanePoint(w.real, w.imag, P), k


def _ext_gcd(a: int, b: int) -> Tuple[int, int, int]:
    if b == 0:
        return a, 1, 0
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def _split_by_threshold(N: int, yq: Fraction):
    """Partition C_N by d >= sqrt(N y) (exact rational comparison on squares)."""
    large, small = [], []
    for g in enumerate_CN(N):
        if g.d * g.d * yq.denominator >= N * yq.numerator:
            large.append(g)
        else:
            small.append(g)
    return large, small


def _sum_log_im_reduced(N: int, yq: Fraction, gammas, P: int) -> mpfr:
    with working(P):
        yv = mpfr(yq.numerator) / yq.denominator
        total = mpfr(0)
        for g in gammas:
            xg = mpfr(g.b) / g.d
            yg = mpfr(g.a) * yv / g.d
            _, yr, _ = _reduce_raw(xg, yg, P)
            total += gmpy2.log(yr)
        return total


def large_d_sum(N: int, y, P: int) -> Tuple[mpfr, mpfr]:
    """(value, bound) for the large-denominator part of sum log Im tau~.

    value = sum over d >= sqrt(Ny) of log Im tau~; bound is
    (4.75 + 3.5 log 2 + (0.5 + log 2)/(2 sqrt N)) psi(N).
    """
    yq = Fraction(y)
    large, _ = _split_by_threshold(N, yq)
    value = _sum_log_im_reduced(N, yq, large, P)
    with working(P):
        ln2 = gmpy2.log(mpfr(2))
        bound = (mpfr("4.75") + mpfr("3.5") * ln2
                 + (mpfr("0.5") + ln2) / (2 * gmpy2.sqrt(mpfr(N)))) * psi(N)
    return value, bound


def small_d_sum(N: int, y, P: int) -> Tuple[mpfr, mpfr]:
    """(value, bound) for the small-denominator part: bound = psi(N)(1/e + log y)."""
    yq = Fraction(y)
    _, small = _split_by_threshold(N, yq)
    value = _sum_log_im_reduced(N, yq, small, P)
    with working(P):
        yv = mpfr(yq.numerator) / yq.denominator
        bound = psi(N) * (1 / gmpy2.exp(mpfr(1)) + gmpy2.log(yv))
    return value, bound


def mean_log_im(N: int, tau: HalfPlanePoint, P: int, orbit: HeckeOrbit | None = None) -> mpfr:
    """(1/psi(N)) sum over the orbit of log Im tau~."""
    if orbit is None:
        orbit = build_orbit(N, tau, P)
    with working(P):
        total = mpfr(0)
        for pt in orbit.points:
            total += gmpy2.log(pt.tau_reduced.im)
        return total / psi(N)


def prop51b_exact(N: int, y: int, P: int) -> Tuple[float, bool]:
    """Exact-form check of the mean log Im identity when Im tau = y >= N.

    Every orbit point then has Im >= 1 and reduces by translation only,
    so Im tau~ / Im tau = a/d exactly; the identity collapses to the
    exact LogPrimeVector statement sum (log a - log d) =
    -psi(N)(log N - 2 lambda_N).  Returns (worst numeric Im deviation,
    exact vector equality).
    """
    if y < N:
        raise ValueError("requires Im tau = y >= N")
    tau = HalfPlanePoint.make(0, y, P)
    orbit = build_orbit(N, tau, P)
    worst = 0.0
    with working(P):
        for pt in orbit.points:
            expect = mpfr(pt.gamma.a) * y / pt.gamma.d
            dev = abs(pt.tau_reduced.im - expect) / expect
            worst = max(worst, float(dev))
    lhs = LogPrimeVector.zero()
    for g in enumerate_CN(N):
        lhs = lhs + (LogPrimeVector.log_of(g.a) - LogPrimeVector.log_of(g.d))
    rhs = (LogPrimeVector.log_of(N) - lambda_vector(N).scale(2)).scale(-psi(N))
    return worst, lhs == rhs


def farey_remark_holds(N: int, y) -> bool:
    """Empirical check of 2d >= (M+1) k r for all 1 <= k <= M (exact integers).

    Here d runs over divisors of N with d >= sqrt(Ny), r = gcd(d, N/d)
    and M = floor(d / sqrt(Ny)).  Tested, not relied upon.
    """
    from .arith import factor

    yq = Fraction(y)
    for d in factor(N).divisors():
        if d * d * yq.denominator < N * yq.numerator:
            continue
        M = _floor_sqrt_ratio(d * d * yq.denominator, N * yq.numerator)
        r = math.gcd(d, N // d)
        for k in range(1, M + 1):
            if 2 * d < (M + 1) * k * r:
                return False
    return True
