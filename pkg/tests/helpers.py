"""Independent oracles shared by the test modules.

Everything here is deliberately computed through routes different from
the package internals: exact integer q-expansions, mpmath special
functions, and literal brute-force enumeration.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Tuple

import gmpy2
from gmpy2 import mpc, mpfr


def trial_division(n: int) -> List[Tuple[int, int]]:
    """Naive factorization oracle."""
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1
    if n > 1:
        out.append((n, 1))
    return out


def sigma3(n: int) -> int:
    return sum(d ** 3 for d in range(1, n + 1) if n % d == 0)


def _series_mul(a: List[int], b: List[int], T: int) -> List[int]:
    out = [0] * (T + 1)
    for i, ai in enumerate(a):
        if ai == 0 or i > T:
            continue
        for j, bj in enumerate(b):
            if i + j > T:
                break
            out[i + j] += ai * bj
    return out


def _series_inv(a: List[int], T: int) -> List[Fraction]:
    # 1 / (1 + a1 q + ...) with a0 = 1; integer input keeps Fractions integral
    assert a[0] == 1
    inv: List[Fraction] = [Fraction(1)] + [Fraction(0)] * T
    for n in range(1, T + 1):
        s = Fraction(0)
        for k in range(1, min(n, len(a) - 1) + 1):
            s += a[k] * inv[n - k]
        inv[n] = -s
    return inv


def j_qexp_coeffs(T: int) -> List[int]:
    """Integer coefficients c_{-1}, c_0, ..., c_{T-1} of j = 1/q + 744 + ...

    Built from scratch: E4 by its sigma_3 sum, the eta product by
    Euler's pentagonal series, 24th power by squaring, series inversion,
    and one multiplication.  Completely independent of the package's
    evaluation path.
    """
    e4 = [1] + [240 * sigma3(n) for n in range(1, T + 1)]
    pent = [0] * (T + 1)
    pent[0] = 1
    k = 1
    while k * (3 * k - 1) // 2 <= T:
        sign = -1 if k % 2 else 1
        e1 = k * (3 * k - 1) // 2
        e2 = k * (3 * k + 1) // 2
        pent[e1] += sign
        if e2 <= T:
            pent[e2] += sign
        k += 1
    p24 = [1] + [0] * T
    # pent^24 = ((pent^2)^2 * pent^2)^4... keep it simple: 24 successive mults
    acc = [1] + [0] * T
    for _ in range(24):
        acc = _series_mul(acc, pent, T)
    p24 = acc
    inv = _series_inv(p24, T)
    e4cubed = _series_mul(_series_mul(e4, e4, T), e4, T)
    num = [Fraction(0)] * (T + 1)
    for i in range(T + 1):
        s = Fraction(0)
        for k2 in range(i + 1):
            s += e4cubed[k2] * inv[i - k2]
        num[i] = s
    coeffs = []
    for n in range(-1, T):
        c = num[n + 1]
        assert c.denominator == 1
        coeffs.append(int(c))
    return coeffs


def eval_j_qexp(re, im, coeffs: List[int], P: int) -> mpc:
    """j(tau) = c_{-1}/q + c_0 + c_1 q + ... from the integer coefficients."""
    with gmpy2.context(precision=P + 64):
        pi = gmpy2.const_pi()
        z = mpc(mpfr(re), mpfr(im))
        q = gmpy2.exp(mpc(0, 2) * pi * z)
        acc = mpc(0)
        for c in reversed(coeffs[2:]):  # c_1, c_2, ...
            acc = (acc + c) * q
        return coeffs[0] / q + coeffs[1] + acc


def validate_farey_partition(M: int, intervals) -> None:
    """Assert every Lemma-style interval inequality exactly, plus the partition."""
    assert intervals[0].lo == Fraction(1, M + 1)
    assert intervals[-1].hi == Fraction(M + 2, M + 1)
    seen = set()
    for iv in intervals:
        assert math.gcd(iv.h, iv.k) == 1
        assert 1 <= iv.h <= iv.k <= M
        assert (iv.h, iv.k) not in seen
        seen.add((iv.h, iv.k))
        f = Fraction(iv.h, iv.k)
        assert iv.lo <= f < iv.hi
        assert Fraction(1, 2 * M * iv.k) <= f - iv.lo <= Fraction(1, (M + 1) * iv.k)
        assert Fraction(1, 2 * M * iv.k) <= iv.hi - f <= Fraction(1, (M + 1) * iv.k)
    for a, b in zip(intervals, intervals[1:]):
        assert a.hi == b.lo
    count = sum(1 for k in range(1, M + 1) for h in range(1, k + 1) if math.gcd(h, k) == 1)
    assert len(intervals) == count
