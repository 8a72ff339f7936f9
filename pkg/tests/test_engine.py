import math
import random

import gmpy2
import pytest
from gmpy2 import mpfr

from modpoly.arith import psi
from modpoly.engine import (
    ModularPolynomial,
    compute_phi,
    default_policy,
    height,
    mahler_measure,
    phi_eval,
    polynomial_roots,
    read_phimat,
    specialize_y,
    vanishing_residual,
    write_phimat,
)
from modpoly.halfplane import (
    HalfPlanePoint,
    PrecisionExhausted,
    PrecisionPolicy,
    rho_point,
    working,
    _reduce_raw,
    _j_from_mpc_reduced,
)
from modpoly.isogeny import s_N

# the N=2 matrix below is certified inside the tests by the engine's own
# oracle pair: two-precision agreement plus the vanishing invariant
PHI2_EXPECTED = (
    (-157464000000000, 8748000000, -162000, 1),
    (8748000000, 40773375, 1488, 0),
    (-162000, 1488, -1, 0),
    (1, 0, 0, 0),
)


def _random_F_points(rng, n, prec):
    pts = []
    while len(pts) < n:
        re = rng.uniform(-0.5, 0.5)
        im = rng.uniform(0.9, 1.6)
        if re * re + im * im > 1.0001:
            pts.append(HalfPlanePoint.make(re, im, prec))
    return pts


def test_phi_1_is_x_minus_y(phi_cache):
    phi = phi_cache.get(1)
    assert phi.coeffs == ((0, -1), (1, 0))
    assert phi.residual == 0.0
    assert height(phi).value == 0.0


def test_phi_2_oracle_and_matrix(phi_cache):
    phi = phi_cache.get(2)
    # oracle 1: recomputation at higher precision gives the identical matrix
    again = phi_cache.get_recheck(2)
    assert again.coeffs == phi.coeffs
    # oracle 2: vanishing invariant at 10 random points
    rng = random.Random(101)
    for tau in _random_F_points(rng, 10, phi.precision_used):
        assert vanishing_residual(phi, tau) < 2 ** -32
    assert phi.coeffs == PHI2_EXPECTED
    assert height(phi).value == pytest.approx(math.log(157464 * 10 ** 9), rel=1e-12)
    assert height(phi).witness == (0, 0)


def test_phi_small_sweep_certificates(phi_cache):
    rng = random.Random(7)
    for N in range(1, 13):
        phi = phi_cache.get(N)
        assert phi.degree == psi(N)
        assert phi.residual < 2 ** -32
        assert phi.coeffs[psi(N)][0] == 1
        if N > 1:
            for i in range(phi.degree + 1):
                for j in range(i):
                    assert phi.coeffs[i][j] == phi.coeffs[j][i]
        for tau in _random_F_points(rng, 3, phi.precision_used):
            assert vanishing_residual(phi, tau) < 2 ** -32, N


def test_two_precision_agreement(phi_cache):
    for N in (3, 6, 10):
        assert phi_cache.get(N).coeffs == phi_cache.get_recheck(N).coeffs


def test_monic_in_y_via_symmetry(phi_cache):
    # symmetric + monic in X implies the Y^psi coefficient column is e_0
    phi = phi_cache.get(6)
    ps = phi.degree
    assert phi.coeffs[0][ps] == 1
    assert all(phi.coeffs[i][ps] == 0 for i in range(1, ps + 1))


def test_default_policy_formula():
    pol = default_policy(60)
    assert pol.base_bits == 20292  # frozen from the sizing formula
    assert default_policy(1).base_bits >= 64


def test_psi_ceiling():
    with pytest.raises(ValueError):
        compute_phi(201)  # psi(201) = 272 exceeds the default ceiling of 200
    with pytest.raises(ValueError):
        compute_phi(0)


def test_precision_exhaustion():
    pol = PrecisionPolicy(base_bits=64, retry_factor=1.01, max_retries=0)
    with pytest.raises(PrecisionExhausted):
        compute_phi(11, policy=pol)


def test_specialize_examples(phi_cache):
    phi1 = phi_cache.get(1)
    assert specialize_y(phi1, 0) == [0, 1]  # X
    phi2 = phi_cache.get(2)
    assert specialize_y(phi2, 0) == [-157464000000000, 8748000000, -162000, 1]
    assert specialize_y(phi2, 1) == [sum(row[j] for j in range(4)) for row in phi2.coeffs]


def test_specialize_root_matching(phi_cache):
    # roots of Phi_N(X, 1728) match the orbit j-values over tau = i
    for N in (2, 3, 5):
        phi = phi_cache.get(N)
        spec = specialize_y(phi, 1728)
        wp = max(512, max(abs(c).bit_length() for c in spec) + 64)
        roots = polynomial_roots(spec, wp)
        with working(wp):
            want = []
            from modpoly.arith import enumerate_CN
            for g in enumerate_CN(N):
                xr, yr, _ = _reduce_raw(mpfr(g.b) / g.d, mpfr(g.a) / g.d, wp)
                want.append(_j_from_mpc_reduced(gmpy2.mpc(xr, yr), wp))
            # multiset pairing with tolerance scaled to the root magnitudes
            tol = mpfr(2) ** -(wp // 4)
            unmatched = list(roots)
            for w in want:
                best = min(range(len(unmatched)),
                           key=lambda i: abs(unmatched[i] - w))
                assert abs(unmatched[best] - w) <= tol * max(mpfr(1), abs(w)), (N, w)
                unmatched.pop(best)
            assert not unmatched


def test_phi_eval_horner(phi_cache):
    phi = phi_cache.get(2)
    with working(128):
        v = phi_eval(phi, gmpy2.mpc(2), gmpy2.mpc(3), 128)
        want = sum(c * 2 ** i * 3 ** j
                   for i, row in enumerate(phi.coeffs) for j, c in enumerate(row))
        assert abs(v - want) <= abs(mpfr(want)) * mpfr(2) ** -100


def test_mahler_trivial():
    assert float(mahler_measure([-1, 1], 128)) == 0.0
    assert float(mahler_measure([5], 128)) == pytest.approx(math.log(5), rel=1e-15)
    with pytest.raises(ValueError):
        mahler_measure([0], 128)


def test_mahler_matches_orbit_sum(phi_cache):
    phi2 = phi_cache.get(2)
    m = mahler_measure(specialize_y(phi2, 0), 160)
    s = s_N(2, rho_point(224), 224)
    with working(160):
        assert abs(m - mpfr(s)) < mpfr(10) ** -20
    # multiple-root case: j0 = 1728 collapses two orbit values
    m_i = mahler_measure(specialize_y(phi2, 1728), 160)
    s_i = s_N(2, HalfPlanePoint.make(0, 1, 224), 224)
    with working(160):
        assert abs(m_i - mpfr(s_i)) < mpfr(10) ** -20


def test_mahler_length_bound():
    rng = random.Random(13)
    for _ in range(12):
        cs = [rng.randint(-10 ** 8, 10 ** 8) for _ in range(rng.randint(2, 10))]
        if not any(cs):
            continue
        m = float(mahler_measure(cs, 96))
        assert m <= math.log(sum(abs(c) for c in cs)) + 1e-9


def test_polynomial_roots_basics():
    roots = polynomial_roots([6, -5, 1], 128)  # (x-2)(x-3)
    got = sorted(float(r.real) for r in roots)
    assert got == pytest.approx([2.0, 3.0], abs=1e-25)
    roots = polynomial_roots([0, 0, 1, 1], 128)  # x^2 (x + 1)
    assert sorted(float(abs(r)) for r in roots) == pytest.approx([0, 0, 1], abs=1e-25)


def test_modular_polynomial_validation():
    with pytest.raises(ValueError):
        ModularPolynomial(2, ((0, 1), (1, 0)), 1.0, 64)  # residual too big
    with pytest.raises(ValueError):
        ModularPolynomial(2, ((0, 2), (1, 0)), 0.0, 64)  # asymmetric
    with pytest.raises(ValueError):
        ModularPolynomial(2, ((0, 1), (2, 0)), 0.0, 64)  # not monic


def test_phimat_roundtrip(tmp_path, phi_cache):
    for N in (1, 2, 6):
        phi = phi_cache.get(N)
        path = tmp_path / f"phi_{N}.phimat"
        write_phimat(phi, str(path))
        back = read_phimat(str(path))
        assert back.N == N and back.coeffs == phi.coeffs
        assert back.residual == phi.residual


def test_phimat_format_and_stability(tmp_path, phi_cache):
    phi1 = phi_cache.get(1)
    p1 = tmp_path / "a.phimat"
    write_phimat(phi1, str(p1))
    lines = p1.read_text().splitlines()
    assert lines[0] == "PHIMAT v1 N=1 psi=1 height_log=0.0"
    assert lines[1] == "0 1 -1"
    assert lines[2].startswith("residual ")
    phi5 = phi_cache.get(5)
    pa, pb = tmp_path / "b1", tmp_path / "b2"
    write_phimat(phi5, str(pa))
    write_phimat(phi5, str(pb))
    assert pa.read_bytes() == pb.read_bytes()
