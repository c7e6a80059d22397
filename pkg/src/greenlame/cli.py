"""Command-line front end: ``greenlame kernel|branch|verify|sweep``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .branch import enumerate_branch_points, solve_branch_point
from .elliptic import addition_defect, lattice_residuals, make_lattice, sigma_w, wp, wp_prime, zeta_w
from .errors import GreenLameError, PoleError
from .reports import CSV_HEADER, SCHEMA, branch_record, build_report, cplx

EXIT_OK, EXIT_DEFECT, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Bad command-line input (exit code 2)."""


def parse_complex(text: str) -> complex:
    try:
        re_, im_ = (float(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from None
    return complex(re_, im_)


def parse_grid(text: str) -> tuple[str, np.ndarray]:
    try:
        axis, lo, hi, num = text.split(":")
        lo, hi, num = float(lo), float(hi), int(num)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'im:lo:hi:N' or 're:lo:hi:N', got {text!r}") from None
    if axis not in ("im", "re") or num < 1:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    return axis, np.linspace(lo, hi, num)


def _lattice(tau: complex):
    try:
        return make_lattice(tau)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _clean(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _clean(obj.item())
    return obj


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(payload, out):
    _emit(json.dumps(_clean(payload), indent=2) + "\n", out)


def _tolerances(args) -> dict:
    return {"kernel": args.tol_kernel, "newton": args.tol_newton}


# --------------------------------------------------------------------------
# subcommands


def cmd_kernel(args) -> int:
    L = _lattice(args.tau)
    res = lattice_residuals(L)
    rows = [("g2", L.g2), ("g3", L.g3)]
    rows += [(f"e{k + 1}", e) for k, e in enumerate(L.e)]
    rows += [("eta1", L.eta1), ("eta2", L.eta2)]
    if args.z is not None:
        z = args.z
        try:
            rows += [("wp", wp(z, L)), ("wp'", wp_prime(z, L)), ("zeta", zeta_w(z, L)), ("sigma", sigma_w(z, L))]
        except PoleError as exc:
            raise InputError(f"z = {z} is a lattice point: {exc}") from None
        res["addition"] = abs(addition_defect(z, 0.37 + 0.11 * L.tau, L)) / max(1.0, L.scale)
    res = {k: float(v) for k, v in res.items()}
    if args.format == "json":
        payload = {"schema": SCHEMA, "tau": cplx(L.tau), "values": {k: cplx(v) for k, v in rows}, "residuals": res,
                   "tolerances_used": _tolerances(args)}
        if args.z is not None:
            payload["z"] = cplx(args.z)
        _dump(payload, args.out)
    else:
        lines = [f"{'quantity':<10} {'real':>24} {'imag':>24}"]
        lines += [f"{k:<10} {complex(v).real:>24.16e} {complex(v).imag:>24.16e}" for k, v in rows]
        lines += [f"residual {k:<10} {v:.3e}" for k, v in res.items()]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if max(res.values()) <= args.tol_kernel else EXIT_DEFECT


def _branch_points(args, L):
    if args.template is not None or args.seed:
        if args.template is None:
            raise InputError("--seed requires --template")
        try:
            return [solve_branch_point(args.n, args.template, args.seed or [], L, tol=args.tol_newton)]
        except ValueError as exc:
            raise InputError(str(exc)) from None
    if args.n not in (1, 2):
        raise InputError("enumeration needs n in {1, 2}; pass --template and --seed for larger n")
    return enumerate_branch_points(args.n, L)


def cmd_branch(args) -> int:
    L = _lattice(args.tau)
    pts = _branch_points(args, L)
    records = [branch_record(bp, L) for bp in pts]
    _dump({"schema": SCHEMA, "tau": cplx(L.tau), "n": args.n, "branch_points": records}, args.out)
    return EXIT_OK if all(r["residual"] <= args.tol_newton for r in records) else EXIT_DEFECT


def _report_kwargs(args) -> dict:
    return {
        "quadrature": not args.no_quad,
        "quad_budget": args.quad_budget,
        "fd_step": args.fd_step,
        "tolerances": _tolerances(args),
        "timings": args.timings,
    }


def cmd_verify(args) -> int:
    L = _lattice(args.tau)
    reports = [build_report(bp, L, **_report_kwargs(args)) for bp in _branch_points(args, L)]
    if args.format == "csv":
        _emit("\n".join([CSV_HEADER] + [r.csv_row() for r in reports]) + "\n", args.out)
    else:
        _dump([r.to_json() for r in reports], args.out)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_DEFECT


def _sweep_rows(job) -> tuple[list[str], bool]:
    tau, n, kw = job
    try:
        L = make_lattice(tau)
        reports = [build_report(bp, L, **kw) for bp in enumerate_branch_points(n, L)]
    except GreenLameError as exc:
        msg = str(exc).replace(",", ";").replace("\n", " ")
        blank = "," * 9
        return [f"{tau.real!r},{tau.imag!r},{n},ERROR{blank},{msg}"], False
    return [r.csv_row() for r in reports], all(r.ok for r in reports)


def cmd_sweep(args) -> int:
    if args.grid is None:
        raise InputError("sweep needs --grid")
    if args.n not in (1, 2):
        raise InputError("sweep enumerates branch points and needs n in {1, 2}")
    axis, values = args.grid
    base = args.tau if args.tau is not None else complex(0.0, 1.0)
    taus = [complex(base.real, v) if axis == "im" else complex(v, base.imag) for v in values]
    if any(t.imag <= 0 for t in taus):
        raise InputError("every tau on the grid must have positive imaginary part")
    kw = _report_kwargs(args)
    jobs = [(t, args.n, kw) for t in taus]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_rows, jobs))
    else:
        results = [_sweep_rows(j) for j in jobs]
    lines = [CSV_HEADER] + [row for rows, _ in results for row in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_DEFECT


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tau", type=parse_complex, default=None, help="modulus as 're,im'")
    common.add_argument("--tol-kernel", type=float, default=1e-10, help="kernel identity tolerance")
    common.add_argument("--tol-newton", type=float, default=1e-10, help="Newton residual tolerance")
    common.add_argument("--out", default=None, help="write output to this path")
    common.add_argument("--format", choices=("json", "csv"), default=None, help="output format")

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--n", type=int, default=1, help="number of points; enumeration needs 1 or 2")
    solve.add_argument("--template", default=None, help="e.g. 'h1,h2' or 'h3,pair' (needs --seed per pair)")
    solve.add_argument("--seed", type=parse_complex, nargs="+", default=None, metavar="RE,IM")

    chain = argparse.ArgumentParser(add_help=False)
    chain.add_argument("--quad-budget", type=int, default=None, help="max integrand evaluations per radius")
    chain.add_argument("--fd-step", type=float, default=1e-5, help="finite-difference step for J(g)")
    chain.add_argument("--no-quad", action="store_true", help="skip the quadrature route for D")
    chain.add_argument("--timings", action="store_true", help="record per-stage milliseconds")

    p = argparse.ArgumentParser(prog="greenlame", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    k = sub.add_parser("kernel", parents=[common], help="lattice constants and elliptic functions at z")
    k.add_argument("--z", type=parse_complex, default=None)
    sub.add_parser("branch", parents=[common, solve], help="branch points of the Lame curve")
    sub.add_parser("verify", parents=[common, solve, chain], help="full verification report per branch point")
    s = sub.add_parser("sweep", parents=[common, solve, chain], help="CSV rows along a line of moduli")
    s.add_argument("--grid", type=parse_grid, default=None, help="'im:lo:hi:N' or 're:lo:hi:N'")
    s.add_argument("--jobs", type=int, default=1)
    return p


_COMMANDS = {"kernel": cmd_kernel, "branch": cmd_branch, "verify": cmd_verify, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "sweep" and args.tau is None:
        parser.error("--tau is required")
    if args.format is None:
        args.format = {"kernel": "table", "sweep": "csv"}.get(args.command, "json")
    if args.command == "kernel" and args.format == "csv":
        parser.error("kernel supports --format json only")
    if args.command == "sweep" and args.format == "json":
        parser.error("sweep supports --format csv only")
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GreenLameError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEFECT


if __name__ == "__main__":
    sys.exit(main())
