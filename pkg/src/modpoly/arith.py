"""Exact arithmetic functions of a level N.

Everything in this module is exact: integers, Fractions, and formal
rational combinations of logarithms of primes (LogPrimeVector).  No
floating point enters any identity check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Tuple

import gmpy2

_TRIAL_LIMIT = 10 ** 6


@dataclass(frozen=True)
class FactoredInteger:
    """A positive integer together with its full prime factorization.

    ``factors`` is a tuple of (prime, exponent) pairs with strictly
    increasing primes and exponents >= 1; their product equals ``value``.
    """

    value: int
    factors: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if self.value < 1:
            raise ValueError("value must be a positive integer")
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last:
                raise ValueError("primes must be strictly increasing")
            if e < 1:
                raise ValueError("exponents must be >= 1")
            last = p
            prod *= p ** e
        if prod != self.value:
            raise ValueError("factorization does not multiply back to value")

    @property
    def primes(self) -> List[int]:
        return [p for p, _ in self.factors]

    def divisors(self) -> List[int]:
        """All positive divisors, sorted increasingly."""
        divs = [1]
        for p, e in self.factors:
            divs = [d * p ** k for d in divs for k in range(e + 1)]
        return sorted(divs)


def _pollard_brent(n: int) -> int:
    """Return a non-trivial factor of composite odd n (deterministic sweep)."""
    if n % 2 == 0:
        return 2
    for x0 in range(2, 100):
        for c in range(1, 50):
            x = y = x0
            d = 1
            while d == 1:
                x = (x * x + c) % n
                y = (y * y + c) % n
                y = (y * y + c) % n
                d = math.gcd(abs(x - y), n)
            if d != n:
                return d
    raise ArithmeticError(f"failed to factor {n}")


def factor(n: int) -> FactoredInteger:
    """Factor a positive integer by trial division, with a rho fallback.

    Trial division runs up to 10**6, which covers every level this
    toolkit is meant for; a deterministic Pollard-Brent sweep handles
    anything larger.  Rejects n < 1.
    """
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("n must be an int")
    if n < 1:
        raise ValueError("n must be >= 1")
    m = n
    out: List[Tuple[int, int]] = []
    for p in (2, 3, 5):
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    p = 7
    wheel = (4, 2, 4, 2, 4, 6, 2, 6)
    w = 0
    while p * p <= m and p <= _TRIAL_LIMIT:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += wheel[w]
        w = (w + 1) % 8
    big: Dict[int, int] = {}
    stack = [m] if m > 1 else []
    while stack:
        v = stack.pop()
        if v == 1:
            continue
        if gmpy2.is_prime(v):
            big[v] = big.get(v, 0) + 1
            continue
        d = _pollard_brent(v)
        stack.append(d)
        stack.append(v // d)
    out.extend(sorted(big.items()))
    out.sort()
    return FactoredInteger(n, tuple(out))


def _as_factored(n) -> FactoredInteger:
    if isinstance(n, FactoredInteger):
        return n
    return factor(n)


def spf_sieve(limit: int) -> List[int]:
    """Smallest-prime-factor table for 0..limit (spf[p] = p for primes)."""
    spf = list(range(limit + 1))
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == p:
            for m in range(p * p, limit + 1, p):
                if spf[m] == m:
                    spf[m] = p
    return spf


def factored_range(limit: int) -> Iterator[FactoredInteger]:
    """Yield FactoredInteger for every n in 1..limit via one sieve pass."""
    spf = spf_sieve(limit)
    for n in range(1, limit + 1):
        m = n
        fac: List[Tuple[int, int]] = []
        while m > 1:
            p = spf[m]
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            fac.append((p, e))
        yield FactoredInteger(n, tuple(fac))


def euler_phi(n) -> int:
    f = _as_factored(n)
    out = 1
    for p, e in f.factors:
        out *= (p - 1) * p ** (e - 1)
    return out


def divisor_count(n) -> int:
    f = _as_factored(n)
    out = 1
    for _, e in f.factors:
        out *= e + 1
    return out


def psi(n) -> int:
    """Dedekind psi: N * prod_{p|N} (1 + 1/p).  Always an integer."""
    f = _as_factored(n)
    out = f.value
    for p, _ in f.factors:
        out = out // p * (p + 1)
    return out


def psi_tilde(n) -> int:
    """Multiplicative divisor-gcd totient sum.

    Prime powers: 2*p^(k//2) for odd k, p^(k/2-1) + p^(k/2) for even k >= 2.
    Agrees with the direct definition sum_{d|N} phi(gcd(d, N/d)); see
    psi_tilde_direct.
    """
    f = _as_factored(n)
    out = 1
    for p, e in f.factors:
        if e % 2 == 1:
            out *= 2 * p ** (e // 2)
        else:
            out *= p ** (e // 2 - 1) + p ** (e // 2)
    return out


def psi_tilde_direct(n) -> int:
    """Direct divisor-sum form of psi_tilde (independent oracle)."""
    f = _as_factored(n)
    return sum(euler_phi(factor(math.gcd(d, f.value // d))) for d in f.divisors())


def _chi4(p: int) -> int:
    # character attached to order-2 elliptic points; p = 2 contributes factor 1
    if p == 2:
        return 0
    return 1 if p % 4 == 1 else -1


def _chi3(p: int) -> int:
    # character attached to order-3 elliptic points; p = 3 contributes factor 1
    if p == 3:
        return 0
    return 1 if p % 3 == 1 else -1


def genus_X0(n) -> int:
    """Genus of the modular curve X_0(N).

    Uses the classical index / elliptic-point / cusp count formula.  For
    gcd(N, 6) = 1 this is literally the displayed product formula; in
    general nu2 vanishes when 4 | N and nu3 vanishes when 9 | N.
    """
    f = _as_factored(n)
    N = f.value
    if N % 4 == 0:
        nu2 = 0
    else:
        nu2 = 1
        for p, _ in f.factors:
            nu2 *= 1 + _chi4(p)
    if N % 9 == 0:
        nu3 = 0
    else:
        nu3 = 1
        for p, _ in f.factors:
            nu3 *= 1 + _chi3(p)
    nu_inf = psi_tilde(f)
    g = 1 + Fraction(psi(f), 12) - Fraction(nu2, 4) - Fraction(nu3, 3) - Fraction(nu_inf, 2)
    if g.denominator != 1:
        raise ArithmeticError(f"non-integral genus for N={N}: {g}")
    return int(g)


class LogPrimeVector:
    """A formal sum  sum_p c_p * log p  with exact rational coefficients.

    Since the log p are linearly independent over Q, two vectors are
    equal iff all coefficients agree; equality here is therefore an
    exact identity check.
    """

    __slots__ = ("entries",)

    def __init__(self, entries: Dict[int, Fraction] | None = None):
        self.entries: Dict[int, Fraction] = {}
        if entries:
            for p, c in entries.items():
                c = Fraction(c)
                if c != 0:
                    self.entries[p] = c

    @classmethod
    def zero(cls) -> "LogPrimeVector":
        return cls()

    @classmethod
    def log_of(cls, n) -> "LogPrimeVector":
        """The vector of log n for a positive integer n."""
        f = _as_factored(n)
        return cls({p: Fraction(e) for p, e in f.factors})

    def __add__(self, other: "LogPrimeVector") -> "LogPrimeVector":
        out = dict(self.entries)
        for p, c in other.entries.items():
            out[p] = out.get(p, Fraction(0)) + c
        return LogPrimeVector(out)

    def __sub__(self, other: "LogPrimeVector") -> "LogPrimeVector":
        out = dict(self.entries)
        for p, c in other.entries.items():
            out[p] = out.get(p, Fraction(0)) - c
        return LogPrimeVector(out)

    def scale(self, s) -> "LogPrimeVector":
        s = Fraction(s)
        return LogPrimeVector({p: c * s for p, c in self.entries.items()})

    __rmul__ = scale
    __mul__ = scale

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogPrimeVector):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(tuple(sorted(self.entries.items())))

    def is_zero(self) -> bool:
        return not self.entries

    def items(self) -> List[Tuple[int, Fraction]]:
        return sorted(self.entries.items())

    def eval_mpfr(self, precision_bits: int):
        """Numeric value sum c_p log p as an mpfr at the given precision."""
        with gmpy2.context(precision=precision_bits + 32):
            tot = gmpy2.mpfr(0)
            for p, c in self.items():
                tot += gmpy2.mpfr(c.numerator) / c.denominator * gmpy2.log(p)
            return tot

    def eval_float(self) -> float:
        return sum(float(c) * math.log(p) for p, c in self.items())

    def __repr__(self):
        body = " + ".join(f"({c})*log{p}" for p, c in self.items())
        return f"LogPrimeVector({body or '0'})"


def lambda_vector(n) -> LogPrimeVector:
    """Isogeny-degree correction term: coefficient (p^e-1)/(p^(e-1)(p^2-1)) per p^e || N."""
    f = _as_factored(n)
    return LogPrimeVector(
        {p: Fraction(p ** e - 1, p ** (e - 1) * (p * p - 1)) for p, e in f.factors}
    )


def kappa_vector(n) -> LogPrimeVector:
    """Classical correction term: coefficient 1/p per prime p | N."""
    f = _as_factored(n)
    return LogPrimeVector({p: Fraction(1, p) for p, _ in f.factors})


@dataclass(frozen=True)
class IsogenyMatrix:
    """Upper-triangular matrix (a b; 0 d) with ad = N, 0 <= b < d, gcd(a,b,d) = 1."""

    a: int
    b: int
    d: int

    def __post_init__(self):
        if self.a < 1 or self.d < 1:
            raise ValueError("a and d must be positive")
        if not (0 <= self.b <= self.d - 1):
            raise ValueError("b must satisfy 0 <= b <= d-1")
        if math.gcd(math.gcd(self.a, self.b), self.d) != 1:
            raise ValueError("gcd(a, b, d) must be 1")

    @property
    def N(self) -> int:
        return self.a * self.d


def enumerate_CN(N: int) -> List[IsogenyMatrix]:
    """All matrices of C_N, sorted lexicographically by (d, b).

    The length always equals psi(N); the fixed order pins down every
    downstream summation.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    out: List[IsogenyMatrix] = []
    for d in _as_factored(N).divisors():
        a = N // d
        r = math.gcd(a, d)
        for b in range(d):
            if math.gcd(b, r) == 1:
                out.append(IsogenyMatrix(a, b, d))
    return out


def _coprime_count(d: int, r: int) -> int:
    # exact count of 0 <= b < d with gcd(b, r) = 1, valid because r | d
    return d // r * euler_phi(r)


def autissier_identity(N: int) -> Tuple[LogPrimeVector, LogPrimeVector]:
    """Both sides of  sum_{gamma in C_N} log(d/a) = psi(N) (log N - 2 lambda_N).

    The left side groups the sum over divisors d of N: the summand does
    not depend on b, and the number of admissible b for fixed d is
    exactly (d/r) phi(r) with r = gcd(d, N/d).  Both sides come back as
    exact LogPrimeVectors; callers assert equality.
    """
    f = _as_factored(N)
    lhs = LogPrimeVector.zero()
    for d in f.divisors():
        a = N // d
        r = math.gcd(a, d)
        w = _coprime_count(d, r)
        term = LogPrimeVector.log_of(d) - LogPrimeVector.log_of(a)
        lhs = lhs + term.scale(w)
    rhs = (LogPrimeVector.log_of(f) - lambda_vector(f).scale(2)).scale(psi(f))
    return lhs, rhs
