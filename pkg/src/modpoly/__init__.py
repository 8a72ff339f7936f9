"""High-precision modular polynomial toolkit with a bound-verification harness."""

from .arith import (
    FactoredInteger,
    IsogenyMatrix,
    LogPrimeVector,
    autissier_identity,
    divisor_count,
    enumerate_CN,
    euler_phi,
    factor,
    genus_X0,
    kappa_vector,
    lambda_vector,
    psi,
    psi_tilde,
    psi_tilde_direct,
)
from .engine import (
    HeightValue,
    ModularPolynomial,
    compute_phi,
    default_policy,
    height,
    mahler_measure,
    phi_eval,
    read_phimat,
    specialize_y,
    vanishing_residual,
    write_phimat,
)
from .halfplane import (
    HalfPlanePoint,
    PrecisionExhausted,
    PrecisionPolicy,
    ReductionError,
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
)
from .isogeny import (
    FareyInterval,
    HeckeOrbit,
    build_orbit,
    farey_intervals,
    hat_tau,
    large_d_sum,
    mean_log_im,
    s_N,
    small_d_sum,
    sn_decomposition_check,
)
from .report import BoundReport, ConstantAudit, write_csv, write_jsonl
from .verify import constant_audit, run_verify

__version__ = "0.1.0"
