"""Arbitrary-precision evaluation of Delta, E4 and j on the upper half-plane.

All evaluation is done with gmpy2 (MPFR/MPC).  Precision is always an
explicit argument; functions open a local gmpy2 context and never touch
global precision state.

Normalizations: Delta = q prod (1-q^n)^24 with q = exp(2 pi i tau), and
E4 = 1 + 240 sum sigma_3(n) q^n, so that j = E4^3 / Delta and j(i) = 1728.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import gmpy2
from gmpy2 import mpc, mpfr

GUARD_BITS = 64
_LN2 = math.log(2)


class ReductionError(RuntimeError):
    """Fundamental-domain reduction failed to terminate (degenerate input)."""


class PrecisionExhausted(RuntimeError):
    """A retry loop ran out of precision attempts."""


def working(precision_bits: int):
    """gmpy2 context at the requested precision plus guard bits."""
    return gmpy2.context(precision=int(precision_bits) + GUARD_BITS)


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point of the upper half-plane with the precision that produced it."""

    re: mpfr
    im: mpfr
    precision_bits: int

    def __post_init__(self):
        if not self.im > 0:
            raise ValueError("imaginary part must be positive")

    @classmethod
    def make(cls, re, im, precision_bits: int) -> "HalfPlanePoint":
        with working(precision_bits):
            return cls(mpfr(re), mpfr(im), precision_bits)

    @classmethod
    def from_mpc(cls, z: mpc, precision_bits: int) -> "HalfPlanePoint":
        return cls(z.real, z.imag, precision_bits)

    def to_mpc(self) -> mpc:
        return mpc(self.re, self.im)

    def __repr__(self):
        return f"HalfPlanePoint({float(self.re)} + {float(self.im)}i @ {self.precision_bits} bits)"


@dataclass(frozen=True)
class UnimodularMatrix:
    """Integer matrix (m11 m12; m21 m22) of determinant 1."""

    m11: int
    m12: int
    m21: int
    m22: int

    def __post_init__(self):
        if self.m11 * self.m22 - self.m12 * self.m21 != 1:
            raise ValueError("determinant must be 1")

    @classmethod
    def identity(cls) -> "UnimodularMatrix":
        return cls(1, 0, 0, 1)

    def compose(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        """Matrix product self * other."""
        return UnimodularMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def inverse(self) -> "UnimodularMatrix":
        return UnimodularMatrix(self.m22, -self.m12, -self.m21, self.m11)

    def apply(self, z: mpc) -> mpc:
        return (self.m11 * z + self.m12) / (self.m21 * z + self.m22)

    def cocycle(self, z: mpc) -> mpc:
        """The automorphy factor m21*z + m22."""
        return self.m21 * z + self.m22


@dataclass(frozen=True)
class PrecisionPolicy:
    """Retry schedule for precision-sensitive computations."""

    base_bits: int
    retry_factor: float = 2.0
    max_retries: int = 3

    def __post_init__(self):
        if self.base_bits < 64:
            raise ValueError("base_bits must be >= 64")
        if not self.retry_factor > 1:
            raise ValueError("retry_factor must exceed 1")

    def bits_for_attempt(self, attempt: int) -> int:
        return math.ceil(self.base_bits * self.retry_factor ** attempt)


# ---------------------------------------------------------------------------
# fundamental domain reduction


def _reduce_raw(x: mpfr, y: mpfr, P: int) -> Tuple[mpfr, mpfr, Tuple[int, int, int, int]]:
    """Core reduction loop on raw (re, im); returns reduced point and matrix g with g(tau) = result."""
    half = mpfr(1) / 2
    m11, m12, m21, m22 = 1, 0, 0, 1
    # translation count per round is bounded; S steps strictly increase im
    max_iter = 128 + 8 * max(0, int(-gmpy2.log2(y)) + 1) + int(gmpy2.log2(1 + abs(x)))
    for _ in range(max_iter):
        n = int(gmpy2.ceil(x - half))
        if n != 0:
            x = x - n
            m11, m12 = m11 - n * m21, m12 - n * m22
        t = x * x + y * y
        if t < 1:
            x, y = -x / t, y / t
            m11, m12, m21, m22 = -m21, -m22, m11, m12
        else:
            break
    else:
        raise ReductionError("fundamental domain reduction did not terminate")
    eps = mpfr(2) ** -(P // 2)
    t = x * x + y * y
    if abs(t - 1) <= eps and x < -eps:
        # boundary convention: Re >= 0 on the unit circle
        x, y = -x / t, y / t
        m11, m12, m21, m22 = -m21, -m22, m11, m12
    if abs(x + half) <= eps:
        # boundary convention: Re = +1/2, not -1/2
        x = x + 1
        m11, m12 = m11 + m21, m12 + m22
    return x, y, (m11, m12, m21, m22)


def reduce_to_F(tau: HalfPlanePoint) -> Tuple[HalfPlanePoint, UnimodularMatrix]:
    """Reduce tau to the standard fundamental domain.

    Returns (tau_tilde, g) with g(tau) = tau_tilde.  Boundary ties
    (|tau| = 1, Re = -1/2) are resolved with tolerance 2^(-P/2) in favor
    of Re >= 0 on the circle and Re = +1/2 on the strip edge.
    """
    P = tau.precision_bits
    with working(P):
        x, y, m = _reduce_raw(tau.re, tau.im, P)
    return HalfPlanePoint(x, y, P), UnimodularMatrix(*m)


# ---------------------------------------------------------------------------
# q-series engines
#
# Everything is driven by the nome h = exp(i pi tau).  For a point with
# Im tau = v the term h^E has magnitude exp(-pi v E), so truncating a
# series with exponents E_0 < E_1 < ... at the first exponent exceeding
#     E* = (P + 40) ln 2 / (pi v)
# leaves a tail below 2^-(P+38) relative to the leading term (the terms
# decay geometrically by at least |h| < 1/10 for v >= 0.7).


_SUBTRACT_V_LIMIT = 8.0  # Jacobi-route cancellation costs ~ pi v log2 e bits


def _theta_fourth_powers(h, P: int, v: float):
    """(theta2^4, theta3^4, theta4^4) at nome h.

    theta3 = 1 + 2 sum h^(n^2) and theta4 is its alternating twin (one
    shared power chain).  For small Im tau, theta2^4 = theta3^4 -
    theta4^4 (Jacobi); the subtraction loses about pi*v*log2(e) bits,
    fine under the guard up to v = 8.  For larger v it would cancel
    catastrophically (theta2^4 ~ 16h is tiny), so theta2^4 then gets its
    own series 16 h (sum h^(n(n+1)))^4.  Works for real and complex h.
    """
    K = int(math.sqrt((P + 40) * _LN2 / (math.pi * v))) + 2
    one = h - h + 1  # in h's type
    t3 = one
    t4 = one
    h2 = h * h
    p = h           # h^(n^2)    at n = 1
    u = h2 * h      # h^(2n+1)   at n = 1
    sign = -1
    direct = v > _SUBTRACT_V_LIMIT
    if direct:
        s2 = one
        p2 = h2         # h^(n(n+1)) at n = 1
        u2 = h2 * h2    # h^(2(n+1)) at n = 1
    for _ in range(K):
        tp = 2 * p
        t3 += tp
        t4 += sign * tp
        p = p * u
        u = u * h2
        if direct:
            s2 += p2
            p2 = p2 * u2
            u2 = u2 * h2
        sign = -sign
    t3_4 = (t3 * t3) ** 2
    t4_4 = (t4 * t4) ** 2
    if direct:
        t2_4 = 16 * h * (s2 * s2) ** 2
    else:
        t2_4 = t3_4 - t4_4
    return t2_4, t3_4, t4_4


def _delta_e4_from_nome(h, P: int, v: float):
    """(Delta, E4) from the nome h = exp(i pi tau).

    E4 = (theta2^8 + theta3^8 + theta4^8)/2 and Delta = (theta2 theta3
    theta4)^8 / 2^8; only even powers appear, so no fractional-power
    branch choices arise.
    """
    t2_4, t3_4, t4_4 = _theta_fourth_powers(h, P, v)
    e4 = (t2_4 * t2_4 + t3_4 * t3_4 + t4_4 * t4_4) / 2
    b = t2_4 * t3_4 * t4_4
    delta = b * b / 256
    return delta, e4


_MIN_IM_SERIES = 0.35


def _delta_e4_at(z: mpc, P: int):
    """(Delta, E4) at a point assumed essentially reduced (Im >= ~0.35)."""
    v = float(z.imag)
    if v < _MIN_IM_SERIES:
        raise ValueError("point too low for direct series; reduce first")
    pi = gmpy2.const_pi()
    h = gmpy2.exp(mpc(0, 1) * pi * z)
    return _delta_e4_from_nome(h, P, v)


def delta(tau: HalfPlanePoint, P: int) -> mpc:
    """Delta(tau) = q prod (1-q^n)^24, for tau in (or near) the fundamental domain.

    Evaluated through Euler's pentagonal expansion of the defining
    product: prod (1-q^n) = 1 + sum_k (-1)^k (q^(k(3k-1)/2) + q^(k(3k+1)/2)),
    truncated once k(3k-1)/2 exceeds E* (see module comment), then raised
    to the 24th power.  Accurate to relative 2^(1-P).
    """
    v = float(tau.im)
    if v < _MIN_IM_SERIES:
        raise ValueError("delta requires Im tau >= 0.35; use delta_any for arbitrary points")
    with working(P):
        pi = gmpy2.const_pi()
        z = tau.to_mpc()
        q = gmpy2.exp(mpc(0, 2) * pi * z)
        estar = (P + 40) * _LN2 / (2 * math.pi * v)
        K = int(math.sqrt(2 * estar / 3)) + 2
        s = mpc(mpfr(1))
        qa = q        # q^(k(3k-1)/2) at k = 1
        qb = q        # running q^k
        sign = -1
        for k in range(1, K + 1):
            s += sign * (qa + qa * qb)          # exponents k(3k-1)/2 and k(3k+1)/2
            if k < K:
                qa = qa * qb * qb * qb * q      # gap to (k+1)(3(k+1)-1)/2 is 3k+1
                qb = qb * q
            sign = -sign
        s3 = s * s * s
        return q * ((s3 * s3) ** 2) ** 2        # q * s^24


def delta_any(tau: HalfPlanePoint, P: int) -> mpc:
    """Delta at an arbitrary point, via reduction and the weight-12 cocycle.

    With g(tau) reduced, Delta(g tau) = (m21 tau + m22)^12 Delta(tau),
    so Delta(tau) is the reduced value divided by the cocycle power.
    """
    red, g = reduce_to_F(tau)
    with working(P):
        d = delta(red, P)
        c = g.cocycle(tau.to_mpc())
        return d / c ** 12


def e4(tau: HalfPlanePoint, P: int) -> mpc:
    """Weight-4 Eisenstein series E4 (q-expansion 1 + 240q + ...), near-reduced points."""
    with working(P):
        return _delta_e4_at(tau.to_mpc(), P)[1]


def _j_from_mpc_reduced(z: mpc, P: int) -> mpc:
    d, ee4 = _delta_e4_at(z, P)
    return ee4 * ee4 * ee4 / d


def j_value(tau: HalfPlanePoint, P: int) -> mpc:
    """j(tau) = E4^3 / Delta, reducing tau internally first.

    The e4/delta route avoids the cancellation the direct q-expansion of
    j suffers at moderate Im; consistency against the integer
    q-expansion is covered by tests.  Relative accuracy 2^(1-P+g) with
    guard g <= 16.
    """
    P = int(P)
    with working(P):
        x, y, _ = _reduce_raw(tau.re, tau.im, P)
        return _j_from_mpc_reduced(mpc(x, y), P)


def j_on_axis(y, P: int) -> mpfr:
    """j(iy) for real y >= 1 through a real-only series path (fast, exact branch)."""
    with working(P):
        yy = mpfr(y)
        if yy < 1:
            raise ValueError("j_on_axis requires y >= 1")
        pi = gmpy2.const_pi()
        h = gmpy2.exp(-pi * yy)
        dd, ee4 = _delta_e4_from_nome(h, P, float(yy))
        return ee4 * ee4 * ee4 / dd


def f_of(tau: HalfPlanePoint, P: int) -> mpfr:
    """f(tau) = log max(|Delta(tau)|, |j(tau) Delta(tau)|) for tau in F.

    Since j Delta = E4^3 exactly, this is max(log|Delta|, 3 log|E4|);
    absolute error well below 2^(-P/2).
    """
    with working(P):
        d, ee4 = _delta_e4_at(tau.to_mpc(), P)
        return max(gmpy2.log(abs(d)), 3 * gmpy2.log(abs(ee4)))


# ---------------------------------------------------------------------------
# inverse j on the real locus


def rho_point(P: int) -> HalfPlanePoint:
    """The corner rho = exp(i pi / 3) = 1/2 + i sqrt(3)/2."""
    with working(P):
        return HalfPlanePoint(mpfr(1) / 2, gmpy2.sqrt(mpfr(3)) / 2, P)


def inverse_j_real(j0, P: int) -> HalfPlanePoint:
    """A point tau in F with j(tau) = j0, for real j0.

    Branches: j0 >= 1728 lands on the imaginary axis, 0 <= j0 < 1728 on
    the unit-circle arc, j0 < 0 on the vertical line Re = 1/2.  On each
    branch j is real and strictly monotone, so plain bisection applies;
    the result satisfies |j(tau) - j0| <= 2^(-P/2) max(1, |j0|).
    """
    with working(P):
        j0 = mpfr(j0)
        tol = mpfr(2) ** -(P // 2) * max(mpfr(1), abs(j0))
        if j0 == 0:
            return rho_point(P)
        max_steps = P + 64
        if j0 >= 1728:
            lo = mpfr(1)
            hi = mpfr(max(1.25, math.log(float(j0) + 745.0) / (2 * math.pi) + 0.5))
            while j_on_axis(hi, P) < j0:
                hi *= 2
            for _ in range(max_steps):
                mid = (lo + hi) / 2
                val = j_on_axis(mid, P)
                if abs(val - j0) <= tol:
                    return HalfPlanePoint(mpfr(0), mid, P)
                if val < j0:
                    lo = mid
                else:
                    hi = mid
            return HalfPlanePoint(mpfr(0), (lo + hi) / 2, P)
        pi = gmpy2.const_pi()
        if j0 > 0:
            # arc: j(e^(i theta)) increases from 0 at theta = pi/3 to 1728 at pi/2
            lo, hi = pi / 3, pi / 2
            for _ in range(max_steps):
                mid = (lo + hi) / 2
                z = mpc(gmpy2.cos(mid), gmpy2.sin(mid))
                val = _j_from_mpc_reduced(z, P).real
                if abs(val - j0) <= tol:
                    return HalfPlanePoint(z.real, z.imag, P)
                if val < j0:
                    lo = mid
                else:
                    hi = mid
            z = mpc(gmpy2.cos((lo + hi) / 2), gmpy2.sin((lo + hi) / 2))
            return HalfPlanePoint(z.real, z.imag, P)
        # vertical line Re = 1/2: j real, decreasing from 0 to -infinity
        half = mpfr(1) / 2
        lo = gmpy2.sqrt(mpfr(3)) / 2
        hi = mpfr(max(1.25, math.log(abs(float(j0)) + 745.0) / (2 * math.pi) + 0.5))
        while _j_from_mpc_reduced(mpc(half, hi), P).real > j0:
            hi *= 2
        for _ in range(max_steps):
            mid = (lo + hi) / 2
            val = _j_from_mpc_reduced(mpc(half, mid), P).real
            if abs(val - j0) <= tol:
                return HalfPlanePoint(half, mid, P)
            if val > j0:
                lo = mid
            else:
                hi = mid
        return HalfPlanePoint(half, (lo + hi) / 2, P)


# ---------------------------------------------------------------------------
# boundary contour scan of f


def _zoom_extremum(fun, lo: float, hi: float, mode: str, rounds: int = 10, pts: int = 24):
    """Repeated grid refinement of an extremum of a continuous function."""
    best_x, best_v = None, None
    for _ in range(rounds):
        step = (hi - lo) / (pts - 1)
        xs = [lo + i * step for i in range(pts)]
        vs = [fun(x) for x in xs]
        if mode == "max":
            i = max(range(pts), key=lambda k: vs[k])
        else:
            i = min(range(pts), key=lambda k: vs[k])
        best_x, best_v = xs[i], vs[i]
        lo = xs[max(0, i - 1)]
        hi = xs[min(pts - 1, i + 1)]
    return best_x, best_v


_YMAX_LINE = 4.0  # above this f on the strip edge is O(|q|), far from both extrema


def contour_extrema(grid_density: int, P: int):
    """Scan f on the boundary components that can carry its extrema.

    Components scanned (right half; the picture is symmetric in Re):
    the arc tau = e^(i theta), theta in [pi/3, pi/2]; the vertical line
    tau = 1/2 + iy, y in [sqrt(3)/2, 4]; and the level curve |j| = 1
    around rho, traced by bisection along rays from rho (the ray at
    angle pi/2 is the vertical line itself, which covers the corner
    where the level curve meets the strip edge).  Candidate extrema are
    refined by repeated local grid zoom.

    Returns (min_value, argmin, max_value, argmax) with float values and
    HalfPlanePoint argument witnesses.
    """
    if grid_density < 10 ** 3:
        raise ValueError("grid_density must be at least 10^3")

    def f_arc(theta: float) -> float:
        with working(P):
            t = mpfr(theta)
            z = mpc(gmpy2.cos(t), gmpy2.sin(t))
            d, ee4 = _delta_e4_at(z, P)
            return float(max(gmpy2.log(abs(d)), 3 * gmpy2.log(abs(ee4))))

    def f_line(y: float) -> float:
        with working(P):
            z = mpc(mpfr(1) / 2, mpfr(y))
            d, ee4 = _delta_e4_at(z, P)
            return float(max(gmpy2.log(abs(d)), 3 * gmpy2.log(abs(ee4))))

    def abs_j(z: mpc) -> float:
        return float(abs(_j_from_mpc_reduced(z, P)))

    cands = []  # (value, re, im)

    with working(P):
        rho = rho_point(P)
        rx, ry = float(rho.re), float(rho.im)

    th_lo, th_hi = math.pi / 3, math.pi / 2
    n = grid_density
    for i in range(n + 1):
        th = th_lo + (th_hi - th_lo) * i / n
        cands.append((f_arc(th), math.cos(th), math.sin(th)))
    tx, tv = _zoom_extremum(f_arc, th_lo, th_hi, "max")
    cands.append((tv, math.cos(tx), math.sin(tx)))
    tx, tv = _zoom_extremum(f_arc, th_lo, th_hi, "min")
    cands.append((tv, math.cos(tx), math.sin(tx)))

    y_lo, y_hi = ry, _YMAX_LINE
    for i in range(n + 1):
        y = y_lo + (y_hi - y_lo) * i / n
        cands.append((f_line(y), 0.5, y))
    yx, yv = _zoom_extremum(f_line, y_lo, y_hi, "max")
    cands.append((yv, 0.5, yx))
    yx, yv = _zoom_extremum(f_line, y_lo, y_hi, "min")
    cands.append((yv, 0.5, yx))

    # level curve |j| = 1: rays from rho at angles [pi/2, 5pi/6] stay in F
    n_rays = max(64, grid_density // 10)
    for i in range(n_rays + 1):
        alpha = math.pi / 2 + (math.pi / 3) * i / n_rays
        ca, sa = math.cos(alpha), math.sin(alpha)
        r_lo, r_hi = 0.0, 0.02
        with working(P):
            while abs_j(mpc(rx + r_hi * ca, ry + r_hi * sa)) < 1 and r_hi < 1.0:
                r_lo, r_hi = r_hi, r_hi * 1.6
            if r_hi >= 1.0:
                raise ReductionError("level-curve tracing escaped; grid too coarse")
            for _ in range(60):
                mid = (r_lo + r_hi) / 2
                if abs_j(mpc(rx + mid * ca, ry + mid * sa)) < 1:
                    r_lo = mid
                else:
                    r_hi = mid
            zr, zi = rx + r_lo * ca, ry + r_lo * sa
            d, ee4 = _delta_e4_at(mpc(mpfr(zr), mpfr(zi)), P)
            val = float(max(gmpy2.log(abs(d)), 3 * gmpy2.log(abs(ee4))))
        cands.append((val, zr, zi))

    vmax, xmax, ymax = max(cands, key=lambda c: c[0])
    vmin, xmin, ymin = min(cands, key=lambda c: c[0])
    argmax = HalfPlanePoint.make(xmax, ymax, P)
    argmin = HalfPlanePoint.make(xmin, ymin, P)
    return vmin, argmin, vmax, argmax
