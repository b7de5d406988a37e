"""Command-line front end: bound, sweep, region-map, laminate, verify.

Exit codes: 0 success, 1 a check failed or an output could not be written,
2 invalid input, 3 the requested structure is not known to exist.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import svg
from .bound import bound, hs_bounds
from .errors import PoroboundError, RegionNotAttainedError, RootNotFoundError, SpecError
from .laminate import build, build_sg, evaluate, to_json
from .oracle import translation_max
from .regions import (ALL_REGIONS, BoundaryKind, Region, boundary_samples, classify, classify_point, psi)
from .tensor import CompositeSpec, Loading, Material, to_cartesian
from .verify import DEFAULT_SEED, DEFAULT_TOLERANCES, run_verification

SWEEP_COLUMNS = ("rho", "region", "U_tr", "alpha_star", "K_star", "L_star", "K_HS", "L_HS", "conjectured")


class UsageError(Exception):
    """Bad command-line values; reported with exit code 2."""


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _materials(text: str) -> tuple[Material, Material]:
    try:
        K1, L1, K2, L2 = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"--mat expects K1,L1,K2,L2, got {text!r}") from None
    return Material(K1, L1), Material(K2, L2)


def _spec(args) -> CompositeSpec:
    for name in ("m1", "m2", "rho"):
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required")
    mat1, mat2 = _materials(args.mat)
    return CompositeSpec(mat1, mat2, args.m1, args.m2, Loading(args.rho))


def _grid(text: str) -> tuple[int, int]:
    try:
        n, m = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--grid expects NxM, got {text!r}") from None
    if n < 2 or m < 2:
        raise UsageError(f"--grid needs at least 2x2 points, got {text}")
    return n, m


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror or exc}") from exc


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _averages_json(av) -> dict:
    return {"S1": av.S1, "D11": av.D11, "D12": av.D12, "S2": av.S2, "D21": av.D21, "D22": av.D22,
            "provenance": av.provenance}


def bound_report(spec: CompositeSpec, verify: bool = False) -> dict:
    res = bound(spec)
    hs = hs_bounds(spec.mat1, spec.mat2, spec.m1, spec.m2)
    out = {"region": str(res.region), "U_tr": res.U_tr, "alpha_star": res.alpha_star,
           "K_star": res.K_star, "L_star": res.L_star, "K_HS": hs.K_HS, "L_HS": hs.L_HS,
           "margin": res.margin, "conjectured": res.conjectured,
           "averages": _averages_json(res.averages),
           "input": {"K1": spec.mat1.K, "L1": spec.mat1.L, "K2": spec.mat2.K, "L2": spec.mat2.L,
                     "m1": spec.m1, "m2": spec.m2, "rho": spec.rho}}
    if verify:
        orc = translation_max(spec)
        out["oracle"] = {"U": orc.U, "alpha_star": orc.alpha_star,
                         "relative_deviation": abs(res.U_tr - orc.U) / abs(res.U_tr)}
    return out


def cmd_bound(args) -> int:
    spec = _spec(args)
    rep = bound_report(spec, args.verify)
    if args.format == "csv":
        cols = ("region", "U_tr", "alpha_star", "K_star", "L_star", "K_HS", "L_HS", "conjectured")
        text = _csv(("m1", "m2", "rho") + cols, [[spec.m1, spec.m2, spec.rho] + [rep[c] for c in cols]])
    elif args.format == "json":
        text = json.dumps(rep, indent=2) + "\n"
    else:
        raise UsageError("bound writes csv or json")
    _emit(text, args.out)
    if args.verify and rep["oracle"]["relative_deviation"] > args.tol_oracle:
        print(f"FAIL oracle deviation {rep['oracle']['relative_deviation']:.3e} > {args.tol_oracle:.1e}",
              file=sys.stderr)
        return 1
    return 0


def sweep_rows(mat1: Material, mat2: Material, m1: float, m2: float, rhos) -> list[dict]:
    hs = hs_bounds(mat1, mat2, m1, m2)
    rows = []
    for rho in rhos:
        res = bound(CompositeSpec(mat1, mat2, m1, m2, Loading(float(rho))))
        rows.append({"rho": float(rho), "region": str(res.region), "U_tr": res.U_tr,
                     "alpha_star": res.alpha_star, "K_star": res.K_star, "L_star": res.L_star,
                     "K_HS": hs.K_HS, "L_HS": hs.L_HS, "conjectured": res.conjectured})
    return rows


def cmd_sweep(args) -> int:
    spec = _spec(argparse.Namespace(**{**vars(args), "rho": args.rho_min}))
    if not -1.0 <= args.rho_min <= args.rho_max <= 1.0:
        raise UsageError("need -1 <= --rho-min <= --rho-max <= 1")
    if args.rho_steps < 2:
        raise UsageError("--rho-steps must be at least 2")
    rhos = np.linspace(args.rho_min, args.rho_max, args.rho_steps)
    rows = sweep_rows(spec.mat1, spec.mat2, spec.m1, spec.m2, rhos)
    if args.format == "svg":
        text = svg.sweep_plot(rows)
    elif args.format == "json":
        text = json.dumps(rows, indent=1) + "\n"
    else:
        text = _csv(SWEEP_COLUMNS, [[r[c] for c in SWEEP_COLUMNS] for r in rows])
    _emit(text, args.out)
    return 0


def region_grid(mat1: Material, mat2: Material, m2: float, n_rho: int, n_m1: int):
    """Cell-centred (rho, m1) grid over [-1, 1] x (0, 1 - m2) and its labels."""
    rhos = [-1.0 + (i + 0.5) * 2.0 / n_rho for i in range(n_rho)]
    m1s = [(j + 0.5) * (1.0 - m2) / n_m1 for j in range(n_m1)]
    labels = [[classify_point(mat1, mat2, m1, m2, r) for m1 in m1s] for r in rhos]
    return rhos, m1s, labels


def region_polylines(mat1: Material, mat2: Material, m2: float, count: int = 200) -> dict:
    lines = {}
    for kind in BoundaryKind:
        try:
            lines[str(kind)] = boundary_samples(kind, mat1, mat2, m2, count)
        except RootNotFoundError:
            continue
    top = 1.0 - m2
    # straight interfaces where the label changes with rho at fixed m1
    lines["rho=0"] = [(0.0, 0.0), (0.0, min(psi(BoundaryKind.CE, mat1, mat2, m2, 0.0), top))]
    lines["rho=m2"] = [(m2, psi(BoundaryKind.AC, mat1, mat2, m2, m2)),
                       (m2, min(psi(BoundaryKind.CE, mat1, mat2, m2, m2), top))]
    lines["rho=-m2"] = [(-m2, psi(BoundaryKind.ApCp, mat1, mat2, m2, -m2)),
                        (-m2, min(psi(BoundaryKind.CpE, mat1, mat2, m2, -m2), top))]
    return lines


def cmd_region_map(args) -> int:
    mat1, mat2 = _materials(args.mat)
    m2 = args.m2_plane if args.m2_plane is not None else args.m2
    if m2 is None:
        raise UsageError("--m2-plane is required")
    if not 0.0 < m2 < 1.0:
        raise SpecError(f"m2 must lie in (0, 1), got {m2}")
    n_rho, n_m1 = _grid(args.grid)
    rhos, m1s, labels = region_grid(mat1, mat2, m2, n_rho, n_m1)
    if args.format == "svg":
        text = svg.region_map(rhos, m1s, labels, region_polylines(mat1, mat2, m2), 1.0 - m2)
    elif args.format == "csv":
        text = _csv(("rho", "m1", "region"),
                    ([r, m, str(lab)] for r, col in zip(rhos, labels) for m, lab in zip(m1s, col)))
    else:
        raise UsageError("region-map writes csv or svg")
    _emit(text, args.out)
    return 0


def cmd_laminate(args) -> int:
    spec = _spec(args)
    res = bound(spec)
    if not res.region.attainable:
        raise RegionNotAttainedError(
            f"region {res.region}: no attaining structure is known, attaining structure conjectured only")
    structure = build_sg(spec) if args.sg else build(spec)
    rep = evaluate(structure, spec.mat1, spec.mat2)
    if args.format == "svg":
        text = svg.laminate_sketch(structure)
    elif args.format == "json":
        doc = {"region": str(res.region), "structure": to_json(structure),
               "report": {"energy": rep.energy, "U_tr": res.U_tr,
                          "relative_gap": abs(rep.energy - res.U_tr) / abs(res.U_tr),
                          "max_jump_residual": rep.max_residual,
                          "fractions": list(rep.fractions),
                          "average_stress": list(to_cartesian(rep.avg_stress)),
                          "det_average": rep.det_avg}}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        raise UsageError("laminate writes json or svg")
    _emit(text, args.out)
    return 0


def cmd_verify(args) -> int:
    mat1, mat2 = _materials(args.mat)
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    regions = None
    if args.regions:
        try:
            regions = [Region(r.strip()) for r in args.regions.split(",")]
        except ValueError:
            raise UsageError(f"--regions expects labels from {[str(r) for r in ALL_REGIONS]}") from None
    tol = {"oracle": args.tol_oracle, "attainment": args.tol_attainment, "residual": args.tol_residual}
    report = run_verification(mat1, mat2, args.samples, args.seed, regions, tol)
    if args.format == "json":
        doc = {"ok": report.ok, "failures": report.failures(), "seed": args.seed, "tolerances": tol,
               "regions": [{k: (str(v) if k == "region" else v) for k, v in vars(s).items()}
                           for s in report.stats]}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = report.table() + "\n"
    _emit(text, args.out)
    for f in report.failures():
        print(f"FAIL {f}", file=sys.stderr)
    return 0 if report.ok else 1


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="porobound",
                                description="Translation bound on the stress energy of porous two-material "
                                            "composites, optimal laminates and region maps.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mat", default="1,2,3,4", metavar="K1,L1,K2,L2",
                        help="compliances of the two materials (default 1,2,3,4)")
    common.add_argument("--m1", type=float)
    common.add_argument("--m2", type=float)
    common.add_argument("--rho", type=float)
    common.add_argument("--format", choices=("csv", "json", "svg"))
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", parents=[common], help="bound at one point (JSON)")
    b.add_argument("--verify", action="store_true", help="also run the numerical oracle")
    b.add_argument("--tol-oracle", type=float, default=DEFAULT_TOLERANCES["oracle"])
    b.set_defaults(func=cmd_bound, format_default="json")

    s = sub.add_parser("sweep", parents=[common], help="rho sweep at fixed fractions (CSV)")
    s.add_argument("--rho-min", type=float, default=-1.0)
    s.add_argument("--rho-max", type=float, default=1.0)
    s.add_argument("--rho-steps", type=int, default=201)
    s.set_defaults(func=cmd_sweep, format_default="csv")

    r = sub.add_parser("region-map", parents=[common], help="region labels on a (rho, m1) grid")
    r.add_argument("--m2-plane", type=float)
    r.add_argument("--grid", default="200x200", metavar="NxM", help="rho points x m1 points")
    r.set_defaults(func=cmd_region_map, format_default="csv")

    lam = sub.add_parser("laminate", parents=[common], help="optimal structure at one point")
    lam.add_argument("--sg", action="store_true", help="four-rectangle cell instead of the laminate (region B)")
    lam.set_defaults(func=cmd_laminate, format_default="json")

    v = sub.add_parser("verify", parents=[common], help="seeded cross-checks against the oracle")
    v.add_argument("--samples", type=int, default=200)
    v.add_argument("--regions", help="comma-separated region labels (default all)")
    v.add_argument("--tol-oracle", type=float, default=DEFAULT_TOLERANCES["oracle"])
    v.add_argument("--tol-attainment", type=float, default=DEFAULT_TOLERANCES["attainment"])
    v.add_argument("--tol-residual", type=float, default=DEFAULT_TOLERANCES["residual"])
    v.set_defaults(func=cmd_verify, format_default="table")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.format_default
    try:
        return args.func(args)
    except (UsageError, SpecError, ValueError) as exc:
        if isinstance(exc, RegionNotAttainedError):
            print(f"error: {exc}", file=sys.stderr)
            return 3
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PoroboundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
