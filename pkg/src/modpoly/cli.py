"""Command-line front end.

Subcommands: phi compute/height, arith, sn, contour, verify, hecke.
Exit codes: 0 all checks passed, 1 a bound report failed, 2 bad
arguments, 3 precision exhausted.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .arith import factor, genus_X0, kappa_vector, lambda_vector, psi, psi_tilde
from .engine import compute_phi, height, write_phimat
from .halfplane import HalfPlanePoint, PrecisionExhausted, contour_extrema
from .isogeny import s_N
from .report import BoundReport, sort_reports, write_csv, write_jsonl
from .verify import DEFAULT_BITS, SUITES, run_verify, theorem_1_2

ENV_PRECISION = "MODPOLY_PRECISION_BITS"


N_CEILING = 10 ** 5  # arithmetic-only commands; engine commands cap via psi


@dataclass
class RunConfig:
    """Resolved invocation parameters shared by the subcommand handlers."""

    command: str
    n_min: int = 0
    n_max: int = 0
    precision_bits: int = DEFAULT_BITS
    output_path: Optional[str] = None
    format: str = "json"
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 <= self.n_min <= self.n_max <= N_CEILING):
            raise ValueError(f"level range must sit inside [0, {N_CEILING}]")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def _resolve_precision(flag_value: Optional[int]) -> int:
    # flag wins over environment, environment over default
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_PRECISION)
    if env:
        return int(env)
    return DEFAULT_BITS


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision-bits", type=int, default=None,
                        help=f"working precision (overrides ${ENV_PRECISION})")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="parallel worker cap (default: available cores)")

    ap = argparse.ArgumentParser(prog="modpoly",
                                 description="modular polynomial toolkit and bound verifier")
    sub = ap.add_subparsers(dest="command", required=True)

    p_phi = sub.add_parser("phi", help="modular polynomial computations")
    phisub = p_phi.add_subparsers(dest="phi_command", required=True)
    p_c = phisub.add_parser("compute", parents=[common],
                            help="compute Phi_N and write PHIMAT v1")
    p_c.add_argument("N", type=int)
    p_c.add_argument("--out", default=None, help="output path (default phi_<N>.phimat)")
    p_h = phisub.add_parser("height", parents=[common], help="compute h(Phi_N)")
    p_h.add_argument("N", type=int)

    p_a = sub.add_parser("arith", parents=[common], help="arithmetic functions of N")
    p_a.add_argument("N", type=int)

    p_s = sub.add_parser("sn", parents=[common], help="orbit Mahler-measure sum S_N(tau)")
    p_s.add_argument("N", type=int)
    p_s.add_argument("--tau", nargs=2, type=float, required=True, metavar=("RE", "IM"))

    p_k = sub.add_parser("contour", parents=[common],
                         help="extrema of f on the boundary contour")
    p_k.add_argument("--density", type=int, default=10 ** 3)

    p_v = sub.add_parser("verify", parents=[common],
                         help="run the bound verification harness")
    p_v.add_argument("--min", type=int, default=1)
    p_v.add_argument("--max", type=int, default=60)
    p_v.add_argument("--suite", choices=SUITES, default="all")
    p_v.add_argument("--out", default=None)
    p_v.add_argument("--format", choices=("json", "csv"), default="json")

    p_e = sub.add_parser("hecke", parents=[common],
                         help="Hecke-average reports for an integral j-invariant")
    p_e.add_argument("N", type=int)
    p_e.add_argument("--j", type=int, required=True)
    return ap


def _print_reports(reports: Sequence[BoundReport]) -> bool:
    ok = True
    for r in sort_reports(reports):
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name} N={r.N} lhs={r.lhs:.6g} rhs={r.rhs:.6g} margin={r.margin:.6g}")
        if not r.passed:
            ok = False
            print(f"  context: {r.context}")
    return ok


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)

    try:
        n_single = getattr(args, "N", 0)
        cfg = RunConfig(
            command=args.command,
            n_min=getattr(args, "min", n_single),
            n_max=getattr(args, "max", n_single),
            precision_bits=_resolve_precision(args.precision_bits),
            output_path=getattr(args, "out", None),
            format=getattr(args, "format", "json"),
            jobs=max(1, args.jobs),
        )
        P = cfg.precision_bits
        jobs = cfg.jobs

        if args.command == "phi":
            if args.phi_command == "compute":
                phi = compute_phi(args.N, jobs=jobs)
                out = cfg.output_path or f"phi_{args.N}.phimat"
                write_phimat(phi, out)
                print(f"wrote {out} (psi={phi.degree}, residual={phi.residual:.3g}, "
                      f"precision={phi.precision_used})")
                return 0
            phi = compute_phi(args.N, jobs=jobs)
            h = height(phi)
            print(f"h(Phi_{args.N}) = {h.value!r} at (i,j)={h.witness}")
            return 0

        if args.command == "arith":
            N = args.N
            f = factor(N)
            lam = lambda_vector(f)
            kap = kappa_vector(f)
            print(f"N = {N} = " + " * ".join(f"{p}^{e}" for p, e in f.factors or [(N, 1)]))
            print(f"psi(N) = {psi(f)}")
            print("lambda_N =", " + ".join(f"({c})*log{p}" for p, c in lam.items()) or "0",
                  f"= {lam.eval_float():.12g}")
            print("kappa_N =", " + ".join(f"({c})*log{p}" for p, c in kap.items()) or "0",
                  f"= {kap.eval_float():.12g}")
            print(f"psi_tilde(N) = {psi_tilde(f)}")
            print(f"genus X_0(N) = {genus_X0(f)}")
            return 0

        if args.command == "sn":
            tau = HalfPlanePoint.make(args.tau[0], args.tau[1], P)
            val = s_N(args.N, tau, P)
            print(f"S_{args.N}({args.tau[0]} + {args.tau[1]}i) = {float(val)!r}")
            return 0

        if args.command == "contour":
            vmin, argmin, vmax, argmax = contour_extrema(args.density, P)
            print(f"max f = {vmax!r} at {argmax}")
            print(f"min f = {vmin!r} at {argmin}")
            return 0

        if args.command == "verify":
            reports, audits = run_verify(cfg.n_min, cfg.n_max, (args.suite,), P, jobs)
            ok = _print_reports(reports)
            for a in audits:
                status = "PASS" if a.passed else "FAIL"
                print(f"{status} audit {a.name}: paper={a.paper_value} "
                      f"recomputed={a.recomputed!r} ({a.direction})")
                ok = ok and a.passed
            if cfg.output_path:
                if cfg.format == "csv":
                    write_csv(reports, cfg.output_path)
                else:
                    write_jsonl(reports, cfg.output_path)
                print(f"wrote {cfg.output_path}")
            return 0 if ok else 1

        if args.command == "hecke":
            phi = compute_phi(args.N, jobs=jobs)
            reports = theorem_1_2(args.N, args.j, phi, P)
            return 0 if _print_reports(reports) else 1

    except PrecisionExhausted as exc:
        print(f"precision exhausted: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
