"""Command-line interface.

Subcommands map one-to-one onto the library layers: `config` and `coeffs`
inspect the central configuration and reduced coefficients, `monodromy`
and `index` evaluate a single system or operator, `scan` sweeps the
(u, e) rectangle, and `verify` runs the claim checklist.  Exit status is
0 on success, 1 when a claim or scan row fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import central_config as cc
from . import monodromy as mono
from .reduced_coeffs import (coefficient_derivatives, coefficient_matrices,
                             coefficients, find_critical_params)
from .scan import ScanConfig, default_output_path, run_scan, verify_claims
from .spectral_index import OperatorSpec, morse_index

EXIT_OK = 0
EXIT_CLAIM_FAILED = 1
EXIT_CONFIG_ERROR = 2


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=1, sort_keys=True))


def _cmd_config(args) -> int:
    conf = cc.build_configuration(args.u)
    payload = {
        "u": conf.u, "m": conf.m, "alpha": conf.alpha,
        "mu_potential": conf.mu_potential,
        "positions": conf.positions.tolist(),
        "masses": conf.masses.tolist(),
        "residual": float(np.abs(cc.central_config_residual(conf)).max()),
    }
    if args.json:
        red = cc.reduction_matrix(args.u)
        payload["reduction_matrix"] = red.A.tolist()
        payload["orthonormality_residual"] = red.orthonormality_residual()
        payload["commutation_residual"] = red.commutation_residual()
        payload["hessian_blocks"] = cc.hessian_blocks(args.u).tolist()
        _print_json(payload)
    else:
        for key in ("u", "m", "alpha", "mu_potential", "residual"):
            print(f"{key} = {payload[key]:.12g}")
        print("positions =", np.array2string(conf.positions, precision=12))
    return EXIT_OK


def _cmd_coeffs(args) -> int:
    co = coefficients(args.u)
    payload = {
        "u": co.u, "phi1": co.phi1, "phi2": co.phi2,
        "psi1": co.psi1, "psi2": co.psi2,
    }
    try:
        der = coefficient_derivatives(args.u)
        payload.update(dphi1=der.dphi1, dphi2=der.dphi2,
                       dpsi1=der.dpsi1, dpsi2=der.dpsi2)
    except cc.DomainError:
        pass
    cp = find_critical_params()
    payload["critical"] = {"u1": cp.u1, "u2": cp.u2, "u3": cp.u3,
                           "beta1": cp.beta1, "phi_gap": cp.phi_gap,
                           "phi_sum": cp.phi_sum}
    if args.e is not None:
        K, T = coefficient_matrices(args.u, args.e, 0.0)
        payload["K_at_t0"] = K.tolist()
        payload["T_at_t0"] = T.tolist()
    if args.json:
        _print_json(payload)
    else:
        for key, val in payload.items():
            if isinstance(val, float):
                print(f"{key} = {val:.12g}")
        print("critical =", {k: round(v, 12) for k, v in payload["critical"].items()})
    return EXIT_OK


def _cmd_monodromy(args) -> int:
    system = mono.LinearSystem(args.block, u=args.u, e=args.e)
    res = mono.fundamental_solution(system, rtol=args.rtol, atol=args.atol)
    _print_json({
        "block": args.block, "u": args.u, "e": args.e,
        "matrix": res.matrix.tolist(),
        "eigenvalues": [[z.real, z.imag] for z in res.eigenvalues],
        "residual": res.residual,
        "classification": res.classification,
        "hyperbolic_pairs": res.hyperbolic_pairs,
    })
    return EXIT_OK


def _cmd_index(args) -> int:
    if args.op == "Abeta":
        if args.beta is None:
            raise cc.DomainError("Abeta requires --beta")
        spec = OperatorSpec(args.op, args.e, beta=args.beta)
    else:
        if args.u is None:
            raise cc.DomainError(f"{args.op} requires --u")
        spec = OperatorSpec(args.op, args.e, u=args.u)
    res = morse_index(spec, rho=args.omega, n_modes=args.N)
    _print_json({
        "family": spec.family, "u": spec.u, "beta": spec.beta, "e": spec.e,
        "rho": res.rho, "omega": [res.omega.real, res.omega.imag],
        "morse_index": res.morse_index, "nullity": res.nullity,
        "min_eigenvalue": res.min_eigenvalue,
        "truncation": res.truncation, "converged": res.converged,
    })
    return EXIT_OK


def _read_config_file(path: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw.rstrip()}")
            key, val = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_SCAN_FILE_KEYS = {
    "u_min": float, "u_max": float, "e_min": float, "e_max": float,
    "nu": int, "ne": int, "blocks": str, "rtol": float, "atol": float,
    "workers": int, "format": str, "output": str, "with_index": lambda s: s.lower() in ("1", "true", "yes"),
}


def _cmd_scan(args) -> int:
    settings = {}
    if args.config:
        raw = _read_config_file(args.config)
        for key, value in raw.items():
            if key not in _SCAN_FILE_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            settings[key] = _SCAN_FILE_KEYS[key](value)
    for key in _SCAN_FILE_KEYS:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            settings[key] = cli_val
    defaults = {"u_min": cc.U_MIN, "u_max": cc.U_MAX, "e_min": 0.0, "e_max": 0.95,
                "nu": 25, "ne": 10, "blocks": "xi,eta", "rtol": mono.DEFAULT_RTOL,
                "atol": mono.DEFAULT_ATOL, "workers": 1, "format": "csv",
                "output": None, "with_index": False}
    for key, val in defaults.items():
        settings.setdefault(key, val)
    config = ScanConfig(
        u_range=(settings["u_min"], settings["u_max"]),
        e_range=(settings["e_min"], settings["e_max"]),
        grid=(settings["nu"], settings["ne"]),
        blocks=tuple(b.strip() for b in settings["blocks"].split(",") if b.strip()),
        rtol=settings["rtol"], atol=settings["atol"],
        with_index=settings["with_index"], output_path=settings["output"],
        format=settings["format"], workers=settings["workers"])
    grid = run_scan(config, force=args.force)
    path = config.output_path or default_output_path(config)
    print(f"{len(grid.rows)} rows -> {path}")
    if grid.failures:
        for u, e, block, msg in grid.failures:
            print(f"failed: u={u:.6g} e={e:.6g} block={block}: {msg}", file=sys.stderr)
        return EXIT_CLAIM_FAILED
    return EXIT_OK


def _cmd_verify(args) -> int:
    nu, ne = (int(x) for x in args.grid.split("x"))
    report = verify_claims(grid_shape=(nu, ne), e_max=args.e_max,
                           workers=args.workers, force=args.force)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_CLAIM_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhombstab",
        description="Linear stability of elliptic rhombus orbits of the planar four-body problem.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config", help="central configuration at a shape parameter")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--json", action="store_true", help="full dump including reduction and Hessian blocks")
    p.set_defaults(func=_cmd_config)

    p = sub.add_parser("coeffs", help="reduced coefficients and critical parameters")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--e", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_coeffs)

    p = sub.add_parser("monodromy", help="one-period fundamental solution of a block")
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--e", type=float, required=True)
    p.add_argument("--block", choices=mono.KINDS, required=True)
    p.add_argument("--rtol", type=float, default=mono.DEFAULT_RTOL)
    p.add_argument("--atol", type=float, default=mono.DEFAULT_ATOL)
    p.set_defaults(func=_cmd_monodromy)

    p = sub.add_parser("index", help="omega-Morse index of a second-order operator")
    p.add_argument("--op", choices=("scriptA", "scriptB", "Abeta"), required=True)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--e", type=float, required=True)
    p.add_argument("--omega", type=float, default=0.0, metavar="RHO",
                   help="boundary twist exponent rho in [0,1); omega = exp(2 pi i rho)")
    p.add_argument("--N", type=int, default=None, help="Fourier truncation")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("scan", help="rectangle sweep writing CSV or JSON")
    p.add_argument("--config", default=None, help="flat key=value settings file")
    p.add_argument("--u-min", dest="u_min", type=float, default=None)
    p.add_argument("--u-max", dest="u_max", type=float, default=None)
    p.add_argument("--e-min", dest="e_min", type=float, default=None)
    p.add_argument("--e-max", dest="e_max", type=float, default=None)
    p.add_argument("--nu", type=int, default=None, help="number of u grid points")
    p.add_argument("--ne", type=int, default=None, help="number of e grid points")
    p.add_argument("--blocks", default=None, help="comma list from xi,eta,full")
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--atol", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--output", default=None)
    p.add_argument("--with-index", dest="with_index", action="store_const", const=True,
                   default=None, help="add omega=1 Morse index columns for xi/eta rows")
    p.add_argument("--force", action="store_true", help="recompute even when cached")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("verify", help="run the claim checklist (a)-(g)")
    p.add_argument("--grid", default="25x10", help="rectangle grid as NUxNE")
    p.add_argument("--e-max", dest="e_max", type=float, default=0.95)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (cc.DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
