"""Command-line front end.

Subcommands: ``check-isothermic``, ``minimal``, ``deform``, ``moebius``,
``quadnet``, ``gen``, ``angles``.  Reports are deterministic JSON (17
significant digits); OBJ and CSV outputs are canonicalized the same way.
Exit codes: 0 success / affirmative verdict, 2 negative or undecidable
verdict from ``check-isothermic``, 1 any error.

``ISOFORM_THREADS`` caps the BLAS thread pools (best effort).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .deform import harmonic_normal_deformation
from .errors import IsoformError
from .expressions import compile_expression
from .harmonic import solve_dirichlet
from .fileio import (
    mesh_report,
    read_obj_realization,
    write_obj,
    write_report,
)
from .generators import (
    CylinderParams,
    cut_annulus,
    cylinder_flex,
    homogeneous_cylinder,
    jessen,
    platonic,
    square_domain,
)
from .isothermic import isothermic_basis
from .minimal import weierstrass
from .moebius import MoebiusMap, circumcircle_angle, circumsphere_angle, sphere_pairs
from .quadnet import QuadNet, fit_factorization, quad_dual, subdivide_and_rotate


def _cap_threads():
    value = os.environ.get("ISOFORM_THREADS")
    if not value:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, value)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(int(value))
    except Exception:
        pass  # env vars above remain as a best-effort cap


def _load_realization(path):
    if path == "-":
        return read_obj_realization(sys.stdin)
    return read_obj_realization(path)


def _vertex_env(realization, domain=None):
    if domain is not None:
        return domain.expression_env()
    p = realization.positions
    return {
        "x": p[:, 0].copy(),
        "y": p[:, 1].copy(),
        "z": p[:, 2].copy(),
        "r": np.hypot(p[:, 0], p[:, 1]),
        "theta": np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi),
    }


def _fmt(x):
    return format(float(x), ".17g")


# ----------------------------------------------------------------------
# handlers
# ----------------------------------------------------------------------

def cmd_check_isothermic(args):
    real = _load_realization(args.mesh)
    basis = isothermic_basis(real, rank_tol=args.tol)
    tail = basis.singular_values[-12:] if basis.singular_values is not None else []
    payload = {
        "command": "check-isothermic",
        "verdict": basis.verdict,
        "nullity": basis.nullity,
        "rank_tol": basis.rank_tol,
        "threshold": basis.threshold,
        "singular_values_tail": list(map(float, tail)),
        "marginal_gap": basis.marginal_gap,
        "lifted_nullity": basis.lifted_nullity,
        "lifted_max_principal_angle": basis.lifted_max_principal_angle,
        "stress_support_sizes": [v.support_size() for v in basis.vectors],
        "residuals": basis.residuals,
        "mesh": mesh_report(real.mesh, real),
    }
    text = write_report(args.json, payload)
    if args.json is None:
        sys.stdout.write(text)
    if args.figure:
        from .plotting import save_spectrum_figure

        save_spectrum_figure(
            basis.singular_values,
            basis.threshold,
            args.figure,
            title=f"self-stress spectrum ({basis.verdict})",
        )
    return 0 if basis.verdict == "isothermic" else 2


def cmd_minimal(args):
    if args.domain == "square":
        domain = square_domain(args.n)
    else:
        domain = cut_annulus(args.r_inner, args.r_outer, args.nr, args.ntheta)
    expr = compile_expression(args.boundary)
    values = np.asarray(expr(_vertex_env(None, domain)), dtype=np.float64)
    if values.ndim == 0:
        values = np.full(domain.mesh.vertex_count, float(values))
    result = weierstrass(domain, values, plane_scale=args.plane_scale)
    surface = result.surface

    surface.write_dual_obj(args.out, comment=f"isoform minimal ({args.domain})")
    if args.gauss:
        write_obj(
            args.gauss,
            surface.gauss.positions,
            surface.gauss.mesh.triangles,
            comment="isoform gauss map",
        )
    payload = {
        "command": "minimal",
        "domain": args.domain,
        "boundary": args.boundary,
        "harmonic_residual": result.harmonic_residual,
        "plane_residuals": result.plane_residuals,
        "transport_residuals": result.transport_residuals,
        "closure_residual": surface.closure_residual,
        "parallelism_max_angle": surface.parallelism_max_angle,
        "duality_sum_max": surface.duality_sum_max,
        "sphere_deviation": surface.sphere_deviation,
        "seam_period": surface.seam_period,
        "seam_period_spread": surface.seam_period_spread,
        "mesh": mesh_report(domain.realization.mesh, domain.realization),
    }
    text = write_report(args.report, payload)
    if args.report is None:
        sys.stdout.write(text)
    if args.figure:
        from .plotting import save_minimal_figure

        save_minimal_figure(surface, args.figure, title=args.domain)
    return 0


def cmd_deform_harmonic_normal(args):
    real = _load_realization(args.mesh)
    env = _vertex_env(real)
    expr = compile_expression(args.u_expr)
    if args.dirichlet:
        values = np.asarray(expr(env), dtype=np.float64)
        u = solve_dirichlet(real, values).values
    else:
        u = np.asarray(expr(env), dtype=np.float64)
        if u.ndim == 0:
            u = np.full(real.mesh.vertex_count, float(u))
    field = harmonic_normal_deformation(real, u)
    hdot = field.mean_curvature_rates()
    hdot_full = [None] * real.mesh.vertex_count
    for row, v in enumerate(real.mesh.interior_vertices):
        hdot_full[v] = float(hdot[row])
    payload = {
        "command": "deform harmonic-normal",
        "u_expr": args.u_expr,
        "dirichlet": bool(args.dirichlet),
        "f_dot": field.fdot,
        "Z": field.z,
        "sigma": field.sigma,
        "Hdot": hdot_full,
        "max_abs_Hdot": float(np.abs(hdot).max(initial=0.0)),
        "compatibility_residual": field.closure_residual,
    }
    text = write_report(args.out, payload)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def cmd_moebius_apply(args):
    real = _load_realization(args.mesh)
    mmap = MoebiusMap.parse_chain(args.chain)
    moved = mmap.apply_realization(real)
    target = args.out if args.out else sys.stdout
    write_obj(target, moved.positions, moved.mesh.triangles,
              comment=f"isoform moebius: {args.chain}")
    return 0


def _load_quadnet(path):
    with open(path, "r", encoding="ascii") as fh:
        return QuadNet.from_json_dict(json.load(fh))


def cmd_quadnet(args):
    net = _load_quadnet(args.grid)
    if args.action == "check":
        fac = fit_factorization(net, tol=args.tol)
        payload = {
            "command": "quadnet check",
            "factorized": fac.factorized,
            "alpha": fac.alpha,
            "beta": fac.beta,
            "residual": fac.residual,
            "max_imag": fac.max_imag,
        }
        text = write_report(args.report, payload)
        if args.report is None:
            sys.stdout.write(text)
        return 0 if fac.factorized else 2

    dual = quad_dual(net, tol=args.tol)
    if args.action == "dual":
        if args.out:
            doc = QuadNet(dual.points).to_json_dict()
            with open(args.out, "w", encoding="ascii") as fh:
                from .fileio import json_dumps

                fh.write(json_dumps(doc))
        payload = {
            "command": "quadnet dual",
            "closure_max": dual.closure_max,
            "diagonal_residual": dual.diagonal_residual,
            "alpha": dual.factorization.alpha,
            "beta": dual.factorization.beta,
        }
        text = write_report(args.report, payload)
        if args.report is None:
            sys.stdout.write(text)
        if args.figure:
            from .plotting import save_quadnet_figure

            save_quadnet_figure(net, dual.points, args.figure)
        return 0

    sub = subdivide_and_rotate(net, dual, args.diag)
    if args.out:
        write_obj(
            args.out,
            sub.realization.positions,
            sub.realization.mesh.triangles,
            comment=f"isoform quadnet subdivide --diag {args.diag}",
        )
    payload = {
        "command": "quadnet subdivide",
        "diag": str(args.diag),
        "compatibility_residual": sub.compatibility_residual,
        "max_abs_Hdot": sub.max_mean_curvature_rate(),
        "Z": sub.z,
        "mesh": mesh_report(sub.realization.mesh, sub.realization),
    }
    text = write_report(args.report, payload)
    if args.report is None:
        sys.stdout.write(text)
    return 0


def cmd_gen(args):
    report_payload = {"command": f"gen {args.kind}"}
    if args.kind == "grid":
        real = square_domain(args.n).realization
    elif args.kind == "annulus":
        real = cut_annulus(args.rin, args.rout, args.nr, args.ntheta).realization
    elif args.kind == "jessen":
        real = jessen()
    elif args.kind in ("tetra", "octa", "icosa"):
        real = platonic(args.kind)
    else:  # cylinder
        params = CylinderParams(
            r=args.r, theta1=args.theta1, h1=args.h1,
            theta2=args.theta2, h2=args.h2,
            s_count=args.s, t_count=args.t,
        )
        real, rep = homogeneous_cylinder(params)
        report_payload.update(
            {
                "edge_lengths": rep.lengths,
                "length_deviation": rep.length_deviation,
                "mean_curvature": rep.mean_curvature,
                "mean_curvature_deviation": rep.mean_curvature_deviation,
                "group_action_residual": rep.group_action_residual,
            }
        )
        if args.flex:
            flex = cylinder_flex(params)
            report_payload["flex"] = {
                "jacobian_singular_values": flex.singular_values,
                "kernel_dim": flex.kernel_dim,
                "kernel": flex.kernel,
                "observed_order": flex.observed_order,
                "rigid_fit_residual": flex.rigid_fit_residual,
            }
    report_payload["mesh"] = mesh_report(real.mesh, real)
    target = args.out if args.out else sys.stdout
    write_obj(target, real.positions, real.mesh.triangles,
              comment=f"isoform gen {args.kind}")
    if args.report:
        write_report(args.report, report_payload)
    return 0


def cmd_angles(args):
    real = _load_realization(args.mesh)
    mesh = real.mesh
    lines = ["i,j,circumcircle_angle"]
    angles = []
    for e in mesh.interior_edges:
        a = circumcircle_angle(real, e)
        angles.append(a)
        i, j = mesh.edges[e]
        lines.append(f"{i},{j},{_fmt(a)}")
    out = args.out if args.out else None
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    sphere_stats = None
    if args.spheres:
        rows = ["e1_i,e1_j,e2_i,e2_j,circumsphere_angle,degenerate"]
        values = []
        degenerate = 0
        for a, b in sphere_pairs(mesh):
            ang, bad = circumsphere_angle(real, a, b)
            i1, j1 = mesh.edges[a]
            i2, j2 = mesh.edges[b]
            rows.append(
                f"{i1},{j1},{i2},{j2},{_fmt(ang) if not bad else 'nan'},{int(bad)}"
            )
            if bad:
                degenerate += 1
            else:
                values.append(ang)
        with open(args.spheres, "w", encoding="ascii") as fh:
            fh.write("\n".join(rows) + "\n")
        sphere_stats = {
            "count": len(values),
            "degenerate": degenerate,
            "max": float(np.max(values)) if values else None,
            "min": float(np.min(values)) if values else None,
        }
    if args.json:
        write_report(
            args.json,
            {
                "command": "angles",
                "circumcircle": {
                    "count": len(angles),
                    "max": float(np.max(angles)) if angles else None,
                    "min": float(np.min(angles)) if angles else None,
                    "mean": float(np.mean(angles)) if angles else None,
                },
                "circumsphere": sphere_stats,
            },
        )
    if args.figure:
        from .plotting import save_angle_histogram

        save_angle_histogram(angles, args.figure, title="circumcircle angles")
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="isoform",
        description="Isothermic triangulated surfaces: verdicts, deformations, "
        "Möbius transport, and discrete minimal surfaces.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-isothermic", help="self-stress nullspace verdict")
    p.add_argument("mesh", help="OBJ path or - for stdin")
    p.add_argument("--tol", type=float, default=1e-8, help="relative rank tolerance")
    p.add_argument("--json", help="write the report to this path")
    p.add_argument("--figure", help="render the singular-value spectrum (PNG)")
    p.set_defaults(func=cmd_check_isothermic)

    p = sub.add_parser("minimal", help="discrete minimal surface from Weierstrass data")
    p.add_argument("--domain", choices=("square", "annulus"), required=True)
    p.add_argument("--n", type=int, default=20, help="square grid resolution")
    p.add_argument("--r-inner", dest="r_inner", type=float, default=0.5)
    p.add_argument("--r-outer", dest="r_outer", type=float, default=1.0)
    p.add_argument("--nr", type=int, default=6, help="annulus radial cells")
    p.add_argument("--ntheta", type=int, default=24, help="annulus angular cells")
    p.add_argument("--boundary", required=True, help='e.g. "x*y", "log(r)", "theta"')
    p.add_argument("--plane-scale", dest="plane_scale", type=float, default=1.0)
    p.add_argument("--out", required=True, help="dual-mesh OBJ output")
    p.add_argument("--gauss", help="also write the Gauss map OBJ")
    p.add_argument("--report", help="write the residual report JSON")
    p.add_argument("--figure", help="render Gauss map + surface (PNG)")
    p.set_defaults(func=cmd_minimal)

    p = sub.add_parser("deform", help="infinitesimal deformation tools")
    dsub = p.add_subparsers(dest="action", required=True)
    d = dsub.add_parser("harmonic-normal", help="normal deformation of a planar mesh")
    d.add_argument("mesh", help="OBJ path or - for stdin")
    d.add_argument("--u-expr", dest="u_expr", required=True)
    d.add_argument(
        "--dirichlet",
        action="store_true",
        help="treat the expression as boundary data and solve for u",
    )
    d.add_argument("--out", help="field JSON output (stdout if omitted)")
    d.set_defaults(func=cmd_deform_harmonic_normal)

    p = sub.add_parser("moebius", help="Möbius transformations")
    msub = p.add_subparsers(dest="action", required=True)
    m = msub.add_parser("apply", help="apply a primitive chain to a mesh")
    m.add_argument("mesh", help="OBJ path or - for stdin")
    m.add_argument(
        "--chain",
        required=True,
        help='e.g. "translate 0 0 2; invert; scale 0.5; rotate 1 0 0 1.57"',
    )
    m.add_argument("--out", help="OBJ output (stdout if omitted)")
    m.set_defaults(func=cmd_moebius_apply)

    p = sub.add_parser("quadnet", help="quad nets with factorized cross-ratios")
    p.add_argument("action", choices=("check", "dual", "subdivide"))
    p.add_argument("grid", help="grid JSON {M, N, points}")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument(
        "--diag",
        default="all-ne",
        help="all-ne | all-nw | alternating | random:<seed>",
    )
    p.add_argument("--out", help="output path (dual JSON / subdivided OBJ)")
    p.add_argument("--report", help="report JSON path")
    p.add_argument("--figure", help="render net + dual wireframes (PNG)")
    p.set_defaults(func=cmd_quadnet)

    p = sub.add_parser("gen", help="reference meshes")
    gsub = p.add_subparsers(dest="kind", required=True)
    g = gsub.add_parser("grid")
    g.add_argument("--n", type=int, default=10)
    g = gsub.add_parser("annulus")
    g.add_argument("--rin", type=float, default=0.5)
    g.add_argument("--rout", type=float, default=1.0)
    g.add_argument("--nr", type=int, default=6)
    g.add_argument("--ntheta", type=int, default=24)
    gsub.add_parser("jessen")
    gsub.add_parser("tetra")
    gsub.add_parser("octa")
    gsub.add_parser("icosa")
    g = gsub.add_parser("cylinder")
    g.add_argument("--r", type=float, default=1.0)
    g.add_argument("--theta1", type=float, default=2 * math.pi / 7)
    g.add_argument("--h1", type=float, default=0.0)
    g.add_argument("--theta2", type=float, default=math.pi / 9)
    g.add_argument("--h2", type=float, default=0.4)
    g.add_argument("--s", type=int, default=7)
    g.add_argument("--t", type=int, default=7)
    g.add_argument("--flex", action="store_true", help="include the kernel analysis")
    for g2 in gsub.choices.values():
        g2.add_argument("--out", help="OBJ output (stdout if omitted)")
        g2.add_argument("--report", help="report JSON path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("angles", help="circumcircle/circumsphere intersection angles")
    p.add_argument("mesh", help="OBJ path or - for stdin")
    p.add_argument("--out", help="circumcircle CSV (stdout if omitted)")
    p.add_argument("--spheres", help="also write neighbouring-sphere CSV here")
    p.add_argument("--json", help="summary report JSON")
    p.add_argument("--figure", help="angle histogram (PNG)")
    p.set_defaults(func=cmd_angles)

    return parser


def main(argv=None):
    _cap_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IsoformError as exc:
        print(f"isoform error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"isoform error [io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
