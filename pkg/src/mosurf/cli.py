"""Command-line front end.

Subcommands: seed | verify | reconstruct | stress | backlund | omega.
Exit codes: 0 success, 1 usage error, 2 file validation/parse error,
3 numerical failure (all nodes singular, non-finite output, empty mesh).

The only environment variable honored is MOSURF_THREADS, which caps the
numpy/BLAS thread pools; it must be read before numpy is imported, hence the
deferred imports below.
"""

from __future__ import annotations

import argparse
import os
import re
import sys

_THREADS = os.environ.get("MOSURF_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import numpy as np

from .errors import FieldFormatError, MosurfError, ParameterError, SingularGridError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the CLI contract says 1.

    The negative-number matcher is widened so values like ``-3:3:-3:3``
    (domains) and ``-0.2`` (parameters) are not mistaken for option flags.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\d[\d.:,eE+\-]*$")

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(message)


class SystemExit2(Exception):
    """Usage error carrying the message (mapped to exit status 1)."""


def _parse_domain(text: str) -> tuple[float, float, float, float]:
    parts = text.split(":")
    if len(parts) != 4:
        raise ParameterError(f"--domain expects x0:x1:y0:y1, got {text!r}")
    try:
        x0, x1, y0, y1 = (float(p) for p in parts)
    except ValueError as exc:
        raise ParameterError(f"--domain expects numbers, got {text!r}") from exc
    return x0, x1, y0, y1


def _parse_init(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ParameterError(f"--init expects lambda0,omega0,phi0, got {text!r}")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ParameterError(f"--init expects numbers, got {text!r}") from exc
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mosurf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_grid_flags(p):
        p.add_argument("--domain", required=True, help="x0:x1:y0:y1 (inclusive)")
        p.add_argument("--nx", type=int, default=101)
        p.add_argument("--ny", type=int, default=101)

    p_seed = sub.add_parser("seed", help="generate a seed solution field file")
    p_seed.add_argument("--family", required=True,
                        choices=["cmc", "pseudospherical", "liouville"])
    p_seed.add_argument("--qn", type=float, default=1.0, help="normal load (nonzero)")
    add_grid_flags(p_seed)
    p_seed.add_argument("--alpha0", type=float, default=1.0, help="cmc amplitude")
    p_seed.add_argument("--v", type=float, default=0.0, help="kink velocity, |v| < 1")
    p_seed.add_argument("--a", type=float, default=0.5, help="liouville coefficient, > 0")
    p_seed.add_argument("--c1", type=float, default=0.0, help="liouville h-branch constant")
    p_seed.add_argument("-o", "--out", required=True)

    p_verify = sub.add_parser("verify", help="evaluate all registry residuals")
    p_verify.add_argument("fieldfile")
    p_verify.add_argument("--report", help="write a JSON report here")
    p_verify.add_argument("--refine", type=int, default=0, metavar="K",
                          help="re-seed on K halved grids and measure orders")
    p_verify.add_argument("--tol", type=float, default=1e-12,
                          help="pass/fail threshold for the algebraic residuals")

    p_rec = sub.add_parser("reconstruct", help="integrate frames and export meshes")
    p_rec.add_argument("fieldfile")
    p_rec.add_argument("-o", "--out", required=True, help="output path prefix")
    p_rec.add_argument("--report", help="write a JSON diagnostics report here")

    p_stress = sub.add_parser("stress", help="export the stress resultants")
    p_stress.add_argument("fieldfile")
    p_stress.add_argument("-o", "--out", required=True, help="CSV output path")

    p_back = sub.add_parser("backlund", help="apply the Backlund transformation")
    p_back.add_argument("fieldfile")
    p_back.add_argument("--m", type=float, default=1.0, help="spectral parameter (nonzero)")
    p_back.add_argument("--init", default="0,1,1.7", help="lambda0,omega0,phi0")
    p_back.add_argument("--bianchi-darboux", action="store_true",
                        help="use the reduced cmc system with mbar = m*qn/2")
    p_back.add_argument("-o", "--out", required=True, help="primed field file path")
    p_back.add_argument("--report", help="write a JSON report here")

    p_omega = sub.add_parser("omega", help="Omega-surface condition checks")
    p_omega.add_argument("fieldfile")
    p_omega.add_argument("--report", help="write a JSON report here")

    return parser


def _cmd_seed(args) -> int:
    from .fields import Grid2D
    from .fileio import write_field_file
    from .seeds import SeedSpec, generate_seed

    x0, x1, y0, y1 = _parse_domain(args.domain)
    grid = Grid2D.from_domain(x0, x1, y0, y1, args.nx, args.ny)
    spec = SeedSpec(args.family, grid, qn=args.qn,
                    alpha0=args.alpha0, v=args.v, a=args.a, c1=args.c1)
    g = generate_seed(spec)
    seed_header = {"family": args.family, "qn": args.qn,
                   "domain": [x0, x1, y0, y1],
                   "alpha0": args.alpha0, "v": args.v, "a": args.a, "c1": args.c1}
    write_field_file(args.out, g, seed=seed_header)
    print(f"seed family={args.family} kind={g.kind} qn={g.qn} "
          f"grid={grid.nx}x{grid.ny} domain=[{x0},{x1}]x[{y0},{y1}] -> {args.out}")
    return EXIT_OK


def _reseed(seed: dict, nx: int, ny: int):
    from .fields import Grid2D
    from .seeds import SeedSpec, generate_seed

    x0, x1, y0, y1 = seed["domain"]
    grid = Grid2D.from_domain(x0, x1, y0, y1, nx, ny)
    spec = SeedSpec(seed["family"], grid, qn=seed["qn"], alpha0=seed.get("alpha0", 1.0),
                    v=seed.get("v", 0.0), a=seed.get("a", 0.5), c1=seed.get("c1", 0.0))
    return generate_seed(spec)


def _cmd_verify(args) -> int:
    from .fileio import read_field_file, report_to_dict, write_report_file
    from .verify import ALGEBRAIC_EQUATIONS, convergence_orders, verify_governing

    g, seed = read_field_file(args.fieldfile)
    report = verify_governing(g)
    orders = None
    if args.refine > 0:
        if seed is None or "family" not in seed:
            raise FieldFormatError(
                f"{args.fieldfile}: --refine requires a seed header to regenerate fields"
            )
        reports = [report]
        nx, ny = g.grid.nx, g.grid.ny
        for _ in range(args.refine):
            nx, ny = 2 * nx - 1, 2 * ny - 1
            reports.append(verify_governing(_reseed(seed, nx, ny)))
        orders = convergence_orders(reports)
    print(f"verify kind={g.kind} qn={g.qn} grid={g.grid.nx}x{g.grid.ny}")
    for name, s in report.entries.items():
        line = f"  {name:18s} linf={s.linf:.6e} l2={s.l2:.6e} excluded={s.excluded}"
        if name in ALGEBRAIC_EQUATIONS:
            line += "  " + ("PASS" if s.linf < args.tol else f"FAIL(tol={args.tol:g})")
        if orders is not None:
            o = orders.get(name)
            line += "  order=exact" if o is None else f"  order={o:.2f}"
        print(line)
    if args.report:
        write_report_file(args.report, report_to_dict(report, g.kind, g.qn, orders=orders))
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    from .fileio import read_field_file, report_to_dict, write_obj, write_report_file, write_table
    from .frames import integrate_frame, mesh_curvatures, orthonormality_drift, path_independence_error, reconstruct_surfaces
    from .kernel import ResidualReport, coefficients_from_governing, stresses

    g, _ = read_field_file(args.fieldfile)
    c = coefficients_from_governing(g)
    s = stresses(g)
    frac = c.n_flagged / g.grid.n_nodes
    if frac > 0.5:
        print(f"warning: {100 * frac:.1f}% of nodes are flagged", file=sys.stderr)
    f = integrate_frame(c, np.eye(3))
    triple, gauss_dev = reconstruct_surfaces(f, c)
    drift = orthonormality_drift(f)
    pie = path_independence_error(c, np.eye(3))
    meanH, gaussK = mesh_curvatures(triple.r)
    n_norm = np.sqrt((triple.N.values ** 2).sum(axis=2))

    faces = write_obj(f"{args.out}_r.obj", triple.r, valid=~c.flagged)
    write_obj(f"{args.out}_rbar.obj", triple.rbar, valid=~c.flagged)
    write_obj(f"{args.out}_N.obj", triple.N, valid=~c.flagged)
    if faces == 0:
        raise SingularGridError("no valid cells remain after flagging; no mesh written")
    write_table(
        f"{args.out}_table.csv",
        g.grid,
        {
            "x": g.grid.meshgrid()[0], "y": g.grid.meshgrid()[1],
            "r": triple.r.values, "N": triple.N.values, "rbar": triple.rbar.values,
            "A1": c.A1.values, "A2": c.A2.values,
            "Ho": c.Ho.values, "Ko": c.Ko.values,
            "T1": s.T1.values, "T2": s.T2.values,
        },
    )
    with np.errstate(invalid="ignore"):
        diag = {
            "orthonormality_drift": drift,
            "path_independence_error": pie,
            "gauss_map_consistency": gauss_dev,
            "normal_unit_max_dev": float(np.nanmax(np.abs(n_norm - 1.0))),
            "mean_curvature_mean": float(np.nanmean(meanH.values)),
            "mean_curvature_min": float(np.nanmin(meanH.values)),
            "mean_curvature_max": float(np.nanmax(meanH.values)),
            "gauss_curvature_mean": float(np.nanmean(gaussK.values)),
            "flagged_nodes": int(c.n_flagged),
            "faces_written": faces,
        }
    print(f"reconstruct grid={g.grid.nx}x{g.grid.ny} faces={faces} "
          f"drift={drift:.3e} path_independence={pie:.3e} "
          f"mean_curvature={diag['mean_curvature_mean']:.6f}")
    if args.report:
        doc = report_to_dict(ResidualReport(g.grid), g.kind, g.qn, diagnostics=diag)
        write_report_file(args.report, doc)
    return EXIT_OK


def _cmd_stress(args) -> int:
    from .fileio import read_field_file, write_table
    from .kernel import stresses

    g, _ = read_field_file(args.fieldfile)
    s = stresses(g)
    X, Y = g.grid.meshgrid()
    write_table(args.out, g.grid, {"x": X, "y": Y, "T1": s.T1.values, "T2": s.T2.values})
    n_flag = int(s.flagged.sum())
    print(f"stress kind={g.kind} qn={g.qn} grid={g.grid.nx}x{g.grid.ny} "
          f"flagged={n_flag} -> {args.out}")
    return EXIT_OK


def _cmd_backlund(args) -> int:
    from .backlund import apply_backlund, bianchi_darboux
    from .fileio import read_field_file, report_to_dict, write_field_file, write_report_file
    from .verify import verify_governing

    if args.m == 0.0:
        raise ParameterError("--m must be nonzero")
    lam0, om0, ph0 = _parse_init(args.init)
    g, _ = read_field_file(args.fieldfile)
    diag: dict[str, object] = {"m": args.m, "init": [lam0, om0, ph0]}
    if args.bianchi_darboux:
        mbar = args.m * g.qn / 2.0
        res = bianchi_darboux(g, mbar, lambda0=lam0, omega0=om0)
        ex_p = np.exp(res.primed_governing.xi.values)
        h_p = res.primed_governing.h.values
        ok = ~(res.branch_invalid | res.lax.singular)
        sigma = res.lax.phi.values - 2.0 * res.lax.omega.values
        with np.errstate(divide="ignore", invalid="ignore"):
            e_alpha_dev = np.exp(res.primed_governing.alpha.values) + (
                res.lax.phi.values / sigma
            ) * np.exp(-g.alpha.values)
        diag["mbar"] = mbar
        diag["e_xi_prime_max_dev"] = float(np.nanmax(np.abs(ex_p - 1.0)[ok]))
        diag["h_prime_max_dev"] = float(np.nanmax(np.abs(h_p - 1.0)[ok]))
        diag["e_alpha_prime_identity_max_dev"] = float(np.nanmax(np.abs(e_alpha_dev)[ok]))
    else:
        res = apply_backlund(g, args.m, lam0, om0, ph0)

    # theorem-form vs raw-update cross-check at valid nodes
    gp = res.primed_governing
    raw = res.raw_update
    ok = ~(res.branch_invalid | raw.mask)
    if not ok.any():
        raise SingularGridError("no valid nodes after the Backlund transformation")
    al_p, xi_p, h_p = gp.alpha.values, gp.xi.values, gp.h.values
    ex_p = np.exp(xi_p)
    if g.kind == "first":
        thm = (
            np.cosh(al_p) + h_p * np.sinh(al_p),
            -(np.sinh(al_p) + h_p * np.cosh(al_p)),
            ex_p * np.sinh(al_p),
            -ex_p * np.cosh(al_p),
        )
    else:
        thm = (
            np.cos(al_p) + h_p * np.sin(al_p),
            np.sin(al_p) - h_p * np.cos(al_p),
            ex_p * np.sin(al_p),
            -ex_p * np.cos(al_p),
        )
    raws = (raw.A1, raw.A2, raw.Ho, raw.Ko)
    cross = max(float(np.nanmax(np.abs(t - r)[ok])) for t, r in zip(thm, raws))
    diag.update(
        constraint_drift=res.lax.constraint_drift,
        lax_path_independence=res.lax.path_independence,
        singular_nodes=int(res.lax.n_singular),
        branch_invalid_nodes=int(res.branch_invalid.sum()),
        theorem_vs_raw_max_dev=cross,
    )
    primed_file, flagged_idx = _finite_governing(gp)
    seed_header = {"flagged": flagged_idx} if flagged_idx else None
    write_field_file(args.out, primed_file, seed=seed_header)
    report = verify_governing(gp)
    print(f"backlund kind={g.kind} m={args.m} drift={res.lax.constraint_drift:.3e} "
          f"singular={res.lax.n_singular} invalid={int(res.branch_invalid.sum())} "
          f"theorem_vs_raw={cross:.3e} -> {args.out}")
    for name, s in report.entries.items():
        print(f"  primed {name:18s} linf={s.linf:.6e} excluded={s.excluded}")
    if args.report:
        write_report_file(args.report, report_to_dict(report, g.kind, g.qn, diagnostics=diag))
    return EXIT_OK


def _finite_governing(gp):
    """Zero-fill NaN sentinels for serialization; returns (fields, flagged indices).

    The field-file format requires finite payloads, so branch-invalid nodes
    are zero-filled and their x-fastest flat indices recorded in the header.
    """
    from .fields import ScalarField
    from .kernel import GoverningFields

    bad = ~(
        np.isfinite(gp.alpha.values)
        & np.isfinite(gp.xi.values)
        & np.isfinite(gp.h.values)
    )
    if not bad.any():
        return gp, []
    if bad.all():
        raise SingularGridError("every node of the primed fields is undefined")
    flat = np.argwhere(bad.ravel(order="F")).ravel()
    clean = GoverningFields(
        kind=gp.kind,
        qn=gp.qn,
        alpha=ScalarField(gp.grid, np.where(bad, 0.0, gp.alpha.values)),
        xi=ScalarField(gp.grid, np.where(bad, 0.0, gp.xi.values)),
        h=ScalarField(gp.grid, np.where(bad, 0.0, gp.h.values)),
    )
    return clean, [int(k) for k in flat]


def _cmd_omega(args) -> int:
    from .fileio import read_field_file, report_to_dict, write_report_file
    from .kernel import coefficients_from_governing, orthogonality_residual, residual_stats
    from .omega import membrane_quad, omega_general_residual, omega_ratios

    g, _ = read_field_file(args.fieldfile)
    c = coefficients_from_governing(g)
    report = omega_ratios(c, g)
    quad = membrane_quad(c, g.qn)
    general = omega_general_residual(quad)
    report.entries["omega-general"] = residual_stats(general, g.grid)
    kernel_res = orthogonality_residual(c, g.qn)
    both = np.isfinite(general) & np.isfinite(kernel_res)
    bit_equal = bool(
        np.array_equal(general[both], kernel_res[both])
        and np.array_equal(np.isfinite(general), np.isfinite(kernel_res))
    )
    umbilic = int(report.entries["omega-1"].excluded)
    diag = {
        "membrane_vs_appendix_bit_equal": bit_equal,
        "membrane_vs_appendix_max_diff": float(
            np.max(np.abs(general[both] - kernel_res[both])) if both.any() else 0.0
        ),
        "umbilic_flagged": umbilic,
    }
    print(f"omega kind={g.kind} grid={g.grid.nx}x{g.grid.ny} "
          f"bit_equal={bit_equal} umbilic_flagged={umbilic}")
    for name, s in report.entries.items():
        print(f"  {name:16s} linf={s.linf:.6e} l2={s.l2:.6e} excluded={s.excluded}")
    if args.report:
        write_report_file(args.report, report_to_dict(report, g.kind, g.qn, diagnostics=diag))
    return EXIT_OK


_COMMANDS = {
    "seed": _cmd_seed,
    "verify": _cmd_verify,
    "reconstruct": _cmd_reconstruct,
    "stress": _cmd_stress,
    "backlund": _cmd_backlund,
    "omega": _cmd_omega,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit2 as exc:
        print(f"mosurf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"mosurf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FieldFormatError as exc:
        print(f"mosurf: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SingularGridError as exc:
        print(f"mosurf: error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MosurfError as exc:
        print(f"mosurf: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"mosurf: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
