"""Exact modular polynomials by evaluation / interpolation, with rounding certificates.

The polynomial for level N is recovered from psi(N)+1 specializations
Phi_N(X, j(i y_m)) whose roots are the Hecke-orbit j-values.  Each
X-degree coefficient is then interpolated as a polynomial in Y = j(i y)
through Newton divided differences and rounded to integers; the largest
rounding residual is the certificate.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

import gmpy2
from gmpy2 import mpc, mpfr

from .arith import lambda_vector, psi
from .halfplane import (
    HalfPlanePoint,
    PrecisionExhausted,
    PrecisionPolicy,
    _j_from_mpc_reduced,
    _reduce_raw,
    j_on_axis,
    working,
)

RESIDUAL_LIMIT = 2.0 ** -32
PSI_CEILING = 200


@dataclass(frozen=True)
class HeightValue:
    """log of the largest |coefficient|, with the (i, j) index realizing it."""

    value: float
    witness: Tuple[int, int]


@dataclass(frozen=True)
class ModularPolynomial:
    """Dense integer coefficient matrix of Phi_N, coeffs[i][j] <-> X^i Y^j."""

    N: int
    coeffs: Tuple[Tuple[int, ...], ...]
    residual: float
    precision_used: int

    def __post_init__(self):
        n = len(self.coeffs)
        if any(len(row) != n for row in self.coeffs):
            raise ValueError("coefficient matrix must be square")
        deg = n - 1
        if self.coeffs[deg][0] != 1:
            raise ValueError("must be monic in X")
        if any(self.coeffs[deg][j] != 0 for j in range(1, n)):
            raise ValueError("X^deg row may only carry the monic term")
        if self.N > 1:
            for i in range(n):
                for j in range(i):
                    if self.coeffs[i][j] != self.coeffs[j][i]:
                        raise ValueError("matrix must be symmetric for N > 1")
        if not self.residual < RESIDUAL_LIMIT:
            raise ValueError("rounding residual certificate exceeded 2^-32")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def default_policy(N: int) -> PrecisionPolicy:
    """Precision schedule sized by the proven height upper bound.

    base_bits = ceil(1.2 * 6 psi(N) (log N - 2 lambda_N + 9.5387) / ln 2)
    + 16 psi(N) + 256; the retry doubles.
    """
    ps = psi(N)
    lam = lambda_vector(N).eval_float()
    main = 6.0 * ps * (math.log(N) - 2.0 * lam + 9.5387)
    base = math.ceil(1.2 * main / math.log(2)) + 16 * ps + 256
    return PrecisionPolicy(base_bits=base, retry_factor=2.0, max_retries=3)


class _AsymmetryError(RuntimeError):
    pass


def _paired_b_values(d: int, r: int) -> List[Tuple[int, bool]]:
    """Representatives b <= d/2 with gcd(b, r) = 1; flag marks a real root (b = 0 or d/2)."""
    out = []
    for b in range(d // 2 + 1):
        if math.gcd(b, r) != 1:
            continue
        if b == 0 or 2 * b == d:
            out.append((b, True))
        else:
            out.append((b, False))
    return out


def _node_row(N: int, y: Fraction, P: int) -> Tuple[mpfr, List[mpfr]]:
    """(Y, coefficients of prod_{gamma} (X - j(tau_gamma))) at tau = iy.

    Orbit j-values at b and d-b are complex conjugates (the q-series has
    real coefficients), so the product is accumulated over real linear
    and quadratic factors only; the result is real by construction.
    """
    with working(P):
        yv = mpfr(y.numerator) / y.denominator
        Y = j_on_axis(yv, P)
        poly = [mpfr(1)]
        for d in _divisors_sorted(N):
            a = N // d
            r = math.gcd(a, d)
            for b, is_real in _paired_b_values(d, r):
                if is_real and b == 0:
                    t = a * yv / d
                    if t < 1:
                        t = 1 / t
                    root = j_on_axis(t, P)
                    poly = _mul_linear(poly, root)
                elif is_real:
                    xr, yr, _ = _reduce_raw(mpfr(b) / d, a * yv / d, P)
                    root = _j_from_mpc_reduced(mpc(xr, yr), P).real
                    poly = _mul_linear(poly, root)
                else:
                    xr, yr, _ = _reduce_raw(mpfr(b) / d, a * yv / d, P)
                    root = _j_from_mpc_reduced(mpc(xr, yr), P)
                    poly = _mul_quadratic(poly, -2 * root.real, gmpy2.norm(root))
        return Y, poly


def _divisors_sorted(N: int) -> List[int]:
    return [d for d in range(1, N + 1) if N % d == 0]


def _mul_linear(poly: List[mpfr], root: mpfr) -> List[mpfr]:
    # poly * (X - root)
    out = [mpfr(0)] * (len(poly) + 1)
    for i, c in enumerate(poly):
        out[i] -= c * root
        out[i + 1] += c
    return out


def _mul_quadratic(poly: List[mpfr], b1: mpfr, b0: mpfr) -> List[mpfr]:
    # poly * (X^2 + b1 X + b0)
    out = [mpfr(0)] * (len(poly) + 2)
    for i, c in enumerate(poly):
        out[i] += c * b0
        out[i + 1] += c * b1
        out[i + 2] += c
    return out


def _node_worker(args) -> Tuple[bytes, List[bytes]]:
    N, num, den, P = args
    Y, row = _node_row(N, Fraction(num, den), P)
    return gmpy2.to_binary(Y), [gmpy2.to_binary(c) for c in row]


_INTERP_STATE = None  # (Ynodes, rows, inv, basis, P); fork-shared with workers


def _interp_column(k: int):
    Ynodes, rows, inv, basis, P = _INTERP_STATE
    n = len(Ynodes)
    with working(P):
        dd = [rows[m][k] for m in range(n)]
        coefs = [dd[0]]
        for lev in range(1, n):
            for i in range(n - lev):
                dd[i] = (dd[i + 1] - dd[i]) * inv[lev - 1][i]
            coefs.append(dd[0])
        mono = [mpfr(0)] * n
        for t in range(n):
            ct = coefs[t]
            bt = basis[t]
            for i in range(t + 1):
                mono[i] += ct * bt[i]
        return mono


def _interp_column_packed(k: int):
    return [gmpy2.to_binary(c) for c in _interp_column(k)]


def _interpolate(Ynodes: Sequence[mpfr], rows: Sequence[Sequence[mpfr]], P: int,
                 jobs: int = 1):
    """Newton-divided-difference interpolation of every X-degree column.

    Denominator inverses and the Newton basis polynomials are shared
    across columns; columns fan out to forked workers when jobs > 1
    (identical arithmetic either way).  Returns the square matrix
    mat[k][j] = coefficient of X^k Y^j.
    """
    global _INTERP_STATE
    n = len(Ynodes)
    with working(P):
        inv = []
        for lev in range(1, n):
            inv.append([1 / (Ynodes[i + lev] - Ynodes[i]) for i in range(n - lev)])
        # Newton basis: basis[t] = coeffs of prod_{l<t} (Y - Y_l)
        basis: List[List[mpfr]] = [[mpfr(1)]]
        for t in range(1, n):
            prev = basis[-1]
            nxt = [mpfr(0)] * (t + 1)
            yl = Ynodes[t - 1]
            for i, c in enumerate(prev):
                nxt[i] -= c * yl
                nxt[i + 1] += c
            basis.append(nxt)
    _INTERP_STATE = (Ynodes, rows, inv, basis, P)
    try:
        if jobs > 1 and n >= 32:
            # pool is created after the state is set so forked children see it
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                packed = list(pool.map(_interp_column_packed, range(n), chunksize=4))
            return [[gmpy2.from_binary(b) for b in col] for col in packed]
        return [_interp_column(k) for k in range(n)]
    finally:
        _INTERP_STATE = None


def _compute_at_precision(N: int, P: int, jobs: int) -> Tuple[List[List[int]], float]:
    ps = psi(N)
    ys = [Fraction(1) + Fraction(m, ps + 1) for m in range(ps + 1)]
    if jobs > 1 and ps >= 8:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            packed = list(pool.map(_node_worker,
                                   [(N, y.numerator, y.denominator, P) for y in ys]))
        Ynodes = [gmpy2.from_binary(b) for b, _ in packed]
        rows = [[gmpy2.from_binary(c) for c in row] for _, row in packed]
    else:
        Ynodes, rows = [], []
        for y in ys:
            Y, row = _node_row(N, y, P)
            Ynodes.append(Y)
            rows.append(row)
    mat = _interpolate(Ynodes, rows, P, jobs)
    neg_inf = float("-inf")
    with working(P):
        # residual and asymmetry live in log2 space: at high precision the
        # raw values underflow any float
        res_log2 = neg_inf
        out: List[List[int]] = []
        for k in range(ps + 1):
            introw = []
            for c in mat[k]:
                v = int(gmpy2.rint(c))
                err = abs(c - v)
                if err > 0:
                    res_log2 = max(res_log2, float(gmpy2.log2(err)))
                introw.append(v)
            out.append(introw)
        if N > 1:
            # symmetry is a theorem; use it as a check, never an assumption
            asym_log2 = neg_inf
            for i in range(ps + 1):
                for j in range(i):
                    a = abs(mat[i][j] - mat[j][i])
                    if a > 0:
                        asym_log2 = max(asym_log2, float(gmpy2.log2(a)))
                    if out[i][j] != out[j][i]:
                        raise _AsymmetryError(
                            f"rounded matrix asymmetric at ({i},{j}) for N={N}")
            # pre-rounding asymmetry must be of rounding-noise size:
            # below 2 * residual, with a 2^(-P/2) noise floor
            if asym_log2 >= max(res_log2 + 1.0, -0.5 * P):
                raise _AsymmetryError(
                    f"pre-rounding asymmetry 2^{asym_log2:.1f} too large for N={N}")
    residual = 2.0 ** res_log2 if res_log2 > -1000 else 0.0
    return out, residual


def compute_phi(N: int, policy: PrecisionPolicy | None = None, jobs: int = 1) -> ModularPolynomial:
    """Compute Phi_N exactly, retrying at higher precision on a weak certificate.

    Nodes are y_m = 1 + m/(psi+1); the interpolation nodes j(i y_m) then
    start at 1728 with rapidly growing spacing, which keeps the divided
    differences well conditioned.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    ps = psi(N)
    if ps > PSI_CEILING:
        raise ValueError(f"psi(N) = {ps} exceeds the configured ceiling {PSI_CEILING}")
    if policy is None:
        policy = default_policy(N)
    last_exc: Exception | None = None
    for attempt in range(policy.max_retries + 1):
        P = policy.bits_for_attempt(attempt)
        try:
            mat, residual = _compute_at_precision(N, P, jobs)
        except _AsymmetryError as exc:
            last_exc = exc
            continue
        if residual < RESIDUAL_LIMIT:
            mono_ok = mat[ps][0] == 1 and all(c == 0 for c in mat[ps][1:]) if N > 1 \
                else mat[ps][0] == 1
            if mono_ok:
                return ModularPolynomial(N, tuple(tuple(r) for r in mat), residual, P)
            last_exc = RuntimeError(f"monic check failed for N={N} at {P} bits")
        else:
            last_exc = RuntimeError(f"residual {residual} >= 2^-32 for N={N} at {P} bits")
    raise PrecisionExhausted(str(last_exc))


def height(phi: ModularPolynomial) -> HeightValue:
    """h(Phi) = log max |c|; the max comparison is exact on the integers."""
    best = 0
    witness = (0, 0)
    for i, row in enumerate(phi.coeffs):
        for j, c in enumerate(row):
            if abs(c) > best:
                best = abs(c)
                witness = (i, j)
    if best == 0:
        raise ValueError("zero polynomial has no height")
    with gmpy2.context(precision=64):
        return HeightValue(float(gmpy2.log(mpfr(best))), witness)


def specialize_y(phi: ModularPolynomial, y0: int) -> List[int]:
    """Exact integer polynomial Phi_N(X, y0), ascending X-degree, monic."""
    out = []
    for row in phi.coeffs:
        acc = 0
        for c in reversed(row):
            acc = acc * y0 + c
        out.append(acc)
    return out


def phi_eval(phi: ModularPolynomial, x: mpc, y: mpc, P: int) -> mpc:
    """Horner evaluation of Phi_N(x, y) at precision P."""
    with working(P):
        acc = mpc(0)
        for row in reversed(phi.coeffs):
            inner = mpc(0)
            for c in reversed(row):
                inner = inner * y + c
            acc = acc * x + inner
        return acc


def vanishing_residual(phi: ModularPolynomial, tau: HalfPlanePoint, P: int | None = None) -> float:
    """|Phi_N(j(tau), j(N tau))| relative to the largest monomial magnitude.

    The point (j(tau), j(N tau)) lies on the curve, so this measures
    pure numerical noise; values well under 2^-32 certify the matrix.
    """
    if P is None:
        P = phi.precision_used or 4096
    N = phi.N
    with working(P):
        x0, y0 = mpfr(tau.re), mpfr(tau.im)
        xr, yr, _ = _reduce_raw(x0, y0, P)
        jx = _j_from_mpc_reduced(mpc(xr, yr), P)
        xr, yr, _ = _reduce_raw(N * x0, N * y0, P)
        jy = _j_from_mpc_reduced(mpc(xr, yr), P)
        val = phi_eval(phi, jx, jy, P)
        if val == 0:
            return 0.0
        log_val = gmpy2.log(abs(val))
        ax, ay = abs(jx), abs(jy)
    # magnitude bookkeeping only needs a few digits
    with gmpy2.context(precision=64):
        lx = gmpy2.log(mpfr(ax)) if ax != 0 else mpfr("-inf")
        ly = gmpy2.log(mpfr(ay)) if ay != 0 else mpfr("-inf")
        maxlog = mpfr("-inf")
        for i, row in enumerate(phi.coeffs):
            for j, c in enumerate(row):
                if c:
                    t = gmpy2.log(mpfr(abs(c))) + i * lx + j * ly
                    if t > maxlog:
                        maxlog = t
        return float(gmpy2.exp(mpfr(log_val) - maxlog))


def polynomial_roots(coeffs: Sequence[int], wp: int, maxsteps: int = 400) -> List[mpc]:
    """All complex roots by Aberth-Ehrlich simultaneous iteration.

    Initial guesses sit on circles whose radii come from the upper
    convex hull of (k, log|c_k|) (the Newton polygon), which copes with
    the enormous magnitude spread of modular-polynomial specializations.
    Multiple roots converge linearly, to about wp/2 bits; callers size
    wp accordingly.  Zero roots are split off exactly beforehand.
    """
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    if not cs:
        raise ValueError("zero polynomial")
    nzero = 0
    while cs[0] == 0:
        cs.pop(0)
        nzero += 1
    deg = len(cs) - 1
    with gmpy2.context(precision=wp):
        roots: List[mpc] = [mpc(0)] * nzero
        if deg == 0:
            return roots
        # Newton polygon radii
        pts = [(k, float(gmpy2.log(mpfr(abs(c))))) for k, c in enumerate(cs) if c]
        hull = [pts[0]]
        for pt in pts[1:]:
            while len(hull) >= 2:
                (x1, y1), (x2, y2) = hull[-2], hull[-1]
                if (y2 - y1) * (pt[0] - x1) <= (pt[1] - y1) * (x2 - x1):
                    hull.pop()
                else:
                    break
            hull.append(pt)
        radii: List[mpfr] = []
        for (k1, l1), (k2, l2) in zip(hull, hull[1:]):
            r = gmpy2.exp(mpfr((l1 - l2) / (k2 - k1)))
            radii.extend([r] * (k2 - k1))
        while len(radii) < deg:
            radii.append(radii[-1] if radii else mpfr(1))
        pi = gmpy2.const_pi()
        zs = []
        for i in range(deg):
            ang = 2 * pi * i / deg + mpfr(2) / 5  # offset breaks symmetry lock-in
            zs.append(radii[i] * mpc(gmpy2.cos(ang), gmpy2.sin(ang)))
        pc = [mpfr(c) for c in cs]
        dc = [k * pc[k] for k in range(1, deg + 1)]
        eps = mpfr(2) ** -(wp // 2 + 16)
        # multiple roots converge linearly and stall above eps; a stalled
        # cluster still carries an accurate sum of log-moduli, so we stop
        # on stagnation and let callers cross-check at two precisions
        history: List[float] = []
        moved = mpfr(1)
        for _ in range(maxsteps):
            moved = mpfr(0)
            for i in range(deg):
                z = zs[i]
                pv = pc[deg]
                for k in range(deg - 1, -1, -1):
                    pv = pv * z + pc[k]
                if pv == 0:
                    continue
                dv = dc[deg - 1]
                for k in range(deg - 2, -1, -1):
                    dv = dv * z + dc[k]
                if dv == 0:
                    zs[i] = z * (1 + mpfr(2) ** -(wp // 3)) + mpfr(2) ** -(wp // 3)
                    moved = mpfr(1)
                    continue
                newton = pv / dv
                s = mpc(0)
                for jx in range(deg):
                    if jx != i:
                        s += 1 / (z - zs[jx])
                denom = 1 - newton * s
                w = newton / denom if denom != 0 else newton
                zs[i] = z - w
                rel = abs(w) / (1 + abs(zs[i]))
                if rel > moved:
                    moved = rel
            if moved < eps:
                break
            history.append(float(gmpy2.log2(moved)) if moved > 0 else -10.0 ** 9)
            if len(history) >= 12 and history[-1] > history[-12] - 1.0 \
                    and history[-1] < -wp / 8:
                break
        if moved >= mpfr(2) ** -(wp // 8):
            raise PrecisionExhausted("Aberth iteration did not converge")
        return roots + zs


def mahler_measure(coeffs: Sequence[int], P: int) -> mpfr:
    """log|lead| + sum log max(1, |root|) via root isolation at precision P.

    Accepted only when runs at working precisions wp and 3wp/2 agree to
    2^(-P/2); otherwise precision doubles (up to 3 retries).  wp starts
    at 2P + 128 so that even multiple roots (linear convergence, wp/2
    accurate bits) leave the measure accurate far beyond 2^(-P/2).
    """
    cs = list(coeffs)
    while cs and cs[-1] == 0:
        cs.pop()
    if not cs:
        raise ValueError("zero polynomial has no Mahler measure")
    if len(cs) == 1:
        with working(P):
            return gmpy2.log(abs(mpfr(cs[0])))
    maxbits = max(abs(c).bit_length() for c in cs)
    wp = max(2 * P + 128, maxbits + 64)
    for _ in range(4):
        try:
            m1 = _mahler_once(cs, wp)
            m2 = _mahler_once(cs, wp + wp // 2)
        except PrecisionExhausted:
            wp *= 2
            continue
        with working(P):
            if abs(m1 - m2) <= mpfr(2) ** -(P // 2) * max(mpfr(1), abs(m1)):
                return mpfr(m2)
        wp *= 2
    raise PrecisionExhausted("mahler_measure root isolation did not stabilize")


def _mahler_once(cs: Sequence[int], wp: int) -> mpfr:
    roots = polynomial_roots(cs, wp)
    with gmpy2.context(precision=wp):
        m = gmpy2.log(abs(mpfr(cs[-1])))
        for r in roots:
            ar = abs(r)
            if ar > 1:
                m += gmpy2.log(ar)
        return m


# ---------------------------------------------------------------------------
# PHIMAT v1 on-disk format


def write_phimat(phi: ModularPolynomial, path: str) -> None:
    """Write the PHIMAT v1 encoding.

    Header `PHIMAT v1 N=<N> psi=<psi> height_log=<decimal>`, then one
    line `i j c` per nonzero coefficient with i <= j (symmetry carries
    the rest; for N = 1 the reader restores the antisymmetric X - Y),
    sorted by (i, j), then `residual <decimal>`.  UTF-8, LF endings.
    """
    h = height(phi)
    lines = [f"PHIMAT v1 N={phi.N} psi={phi.degree} height_log={h.value!r}"]
    for i, row in enumerate(phi.coeffs):
        for j, c in enumerate(row):
            if i <= j and c:
                lines.append(f"{i} {j} {c}")
    lines.append(f"residual {phi.residual!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_phimat(path: str) -> ModularPolynomial:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    if head[:2] != ["PHIMAT", "v1"]:
        raise ValueError("not a PHIMAT v1 file")
    fields = dict(part.split("=", 1) for part in head[2:])
    N = int(fields["N"])
    ps = int(fields["psi"])
    residual = 0.0
    mat = [[0] * (ps + 1) for _ in range(ps + 1)]
    for ln in lines[1:]:
        if ln.startswith("residual"):
            residual = float(ln.split()[1])
            continue
        i, j, c = ln.split()
        i, j, c = int(i), int(j), int(c)
        mat[i][j] = c
        if N > 1:
            mat[j][i] = c
    if N == 1:
        mat[1][0] = 1  # monic-in-X convention restores X - Y
    return ModularPolynomial(N, tuple(tuple(r) for r in mat), residual, 0)
