"""Command-line entry point: problem files in, verdict/certificate reports out.

Exit-code contract for `check` (stable):
    0  STATIONARY with the qualification condition holding
    1  NOT_STATIONARY
    2  QUALIFICATION_FAILS (stationarity still reported, flagged unreliable)
    3  input error
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time
from fractions import Fraction

from .errors import BilevelCertError, SchemaError
from .cones import normal_cone_box, normal_cone_polyhedron
from .model import BoxSet, make_candidate
from .oracle import GridSpec, phi0, solve_lower_grid, verify_optimistic_local
from .problem_io import (
    TOOL_NAME,
    TOOL_VERSION,
    cone_out,
    dump_report,
    load_problem,
    tolerances_out,
    vec_out,
)
from .stationarity import (
    check_m_stationarity,
    check_qualification,
    describe_branch,
    graph_cone_union,
)

EXIT_STATIONARY = 0
EXIT_NOT_STATIONARY = 1
EXIT_QUALIFICATION_FAILS = 2
EXIT_INPUT_ERROR = 3


def _base_report(verdict, mode=None, tols=None):
    rep = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "verdict": verdict,
    }
    if mode is not None:
        rep["mode"] = mode
    if tols is not None:
        rep["tolerances"] = tolerances_out(tols)
    return rep


def _emit(report, args, started):
    report["timing_seconds"] = round(time.monotonic() - started, 6)
    text = dump_report(report)
    print(text)
    out = getattr(args, "output", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def _error_report(args, started, errors):
    rep = _base_report("INPUT_ERROR")
    rep["errors"] = errors
    _emit(rep, args, started)
    return EXIT_INPUT_ERROR


def _load(args):
    problem, cands = load_problem(args.problem)
    overrides = {}
    if getattr(args, "tol_active", None) is not None:
        overrides["active"] = args.tol_active
    if getattr(args, "tol_residual", None) is not None:
        overrides["residual"] = args.tol_residual
    if getattr(args, "tol_cone", None) is not None:
        overrides["cone"] = args.tol_cone
    if overrides:
        problem = dataclasses.replace(
            problem, tolerances=problem.tolerances.override(**overrides)
        )
    return problem, cands


def _pick_candidate(problem, cands, index, exact=True):
    if index < 0 or index >= len(cands):
        raise SchemaError(f"candidate index {index} out of range (0..{len(cands) - 1})")
    x, y = cands[index]
    return make_candidate(problem, x, y, exact=exact)


def cmd_check(args):
    started = time.monotonic()
    try:
        problem, cands = _load(args)
        mode = "rational" if args.rational else "float" if args.float else "auto"
        cand = _pick_candidate(problem, cands, args.candidate, exact=mode != "float")
        qual = check_qualification(problem, cand, mode)
        cert = check_m_stationarity(
            problem, cand, mode, verify_derivatives=args.verify_derivatives
        )
    except (BilevelCertError, OSError) as err:
        return _error_report(args, started, [str(err)])

    if not qual.holds:
        verdict = "QUALIFICATION_FAILS"
        code = EXIT_QUALIFICATION_FAILS
    elif cert is not None:
        verdict = "STATIONARY"
        code = EXIT_STATIONARY
    else:
        verdict = "NOT_STATIONARY"
        code = EXIT_NOT_STATIONARY

    used_mode = cert.mode if cert is not None else (
        "rational" if mode != "float" else "float"
    )
    rep = _base_report(verdict, used_mode, problem.tolerances)
    rep["candidate"] = {
        "index": args.candidate,
        "x": vec_out(cand.x),
        "y": vec_out(cand.y),
        "z": vec_out(cand.z),
    }
    rep["qualification"] = qual.as_dict()
    if not qual.holds:
        rep["qualification"]["note"] = (
            "stationarity verdict is not a validated necessity test at this point"
        )
        rep["stationarity"] = "STATIONARY" if cert is not None else "NOT_STATIONARY"
    if cert is not None:
        rep["certificate"] = cert.as_dict()
        rep["certificate"]["branch_description"] = describe_branch(cert.branch_label)
    else:
        rep["certificate"] = None
    _emit(rep, args, started)
    return code


def _parse_point(text):
    return tuple(Fraction(p.strip()) for p in text.split(",") if p.strip())


def _grid(args, center):
    lo = args.grid_lo
    hi = args.grid_hi
    if lo is None or hi is None:
        rad = args.grid_radius
        bounds = tuple((float(c) - rad, float(c) + rad) for c in center)
    else:
        bounds = tuple((lo, hi) for _ in center)
    return GridSpec(bounds=bounds, resolution=args.grid_res)


def cmd_lower(args):
    started = time.monotonic()
    try:
        problem, _ = _load(args)
        x = _parse_point(args.x)
        if len(x) != problem.n:
            raise SchemaError(f"x must have {problem.n} coordinates")
        center = [0.0] * problem.m
        grid = _grid(args, center)
        sols = solve_lower_grid(problem, x, grid)
        value = phi0(problem, x, grid)
    except (BilevelCertError, OSError, ValueError) as err:
        return _error_report(args, started, [str(err)])
    rep = _base_report("OK", tols=problem.tolerances)
    rep["x"] = vec_out(x)
    rep["solutions"] = [[float(v) for v in y] for y in sols]
    rep["phi0"] = float(value)
    _emit(rep, args, started)
    return 0


def cmd_cone(args):
    started = time.monotonic()
    try:
        problem, cands = _load(args)
        which = args.which
        rep = _base_report("OK", tols=problem.tolerances)
        rep["which"] = which
        if which == "omega":
            point = _parse_point(args.point)
            cone = normal_cone_polyhedron(
                problem.omega.A, problem.omega.b, point, problem.tolerances.active
            )
            rep["point"] = vec_out(point)
            rep["cone"] = cone_out(cone)
        elif which == "K":
            point = _parse_point(args.point)
            if isinstance(problem.K, BoxSet):
                cone = normal_cone_box(
                    problem.K.lower, problem.K.upper, point, problem.tolerances.active
                )
            else:
                cone = normal_cone_polyhedron(
                    problem.K.A, problem.K.b, point, problem.tolerances.active
                )
            rep["point"] = vec_out(point)
            rep["cone"] = cone_out(cone)
        elif which == "gph":
            if args.point:
                ytxt, _, ztxt = args.point.partition(";")
                y = _parse_point(ytxt)
                z = _parse_point(ztxt)
            else:
                cand = _pick_candidate(problem, cands, args.candidate)
                y, z = cand.y, cand.z
            union = graph_cone_union(problem, y, z, problem.tolerances)
            rep["point"] = {"y": vec_out(y), "z": vec_out(z)}
            rep["branch_count"] = len(union)
            rep["branches"] = [
                {
                    "label": label,
                    "description": describe_branch(label),
                    "cone": cone_out(cone),
                }
                for label, cone in union
            ]
        else:  # pragma: no cover - argparse restricts choices
            raise SchemaError(f"unknown cone target {which!r}")
    except (BilevelCertError, OSError, ValueError) as err:
        return _error_report(args, started, [str(err)])
    _emit(rep, args, started)
    return 0


def cmd_verify(args):
    started = time.monotonic()
    try:
        problem, cands = _load(args)
        cand = _pick_candidate(problem, cands, args.candidate, exact=False)
        grid = _grid(args, cand.y)
        verdict = verify_optimistic_local(
            problem, cand, args.radius, grid, x_resolution=args.x_res
        )
    except (BilevelCertError, OSError, ValueError) as err:
        return _error_report(args, started, [str(err)])
    rep = _base_report("OK", tols=problem.tolerances)
    rep["candidate"] = {
        "index": args.candidate,
        "x": [float(v) for v in cand.x],
        "y": [float(v) for v in cand.y],
    }
    rep["locally_optimal"] = verdict.locally_optimal
    rep["value"] = verdict.value_at_candidate
    rep["consistency_gap"] = verdict.consistency_gap
    rep["worst_violator"] = (
        list(verdict.worst_violator) if verdict.worst_violator else None
    )
    rep["worst_violation"] = verdict.worst_violation
    _emit(rep, args, started)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Verify stationarity certificates for optimistic bilevel programs.",
    )
    p.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("problem", help="problem file (JSON)")
        sp.add_argument("--tol-active", type=float, default=None)
        sp.add_argument("--tol-residual", type=float, default=None)
        sp.add_argument("--tol-cone", type=float, default=None)

    def add_grid(sp):
        sp.add_argument("--grid-lo", type=float, default=None)
        sp.add_argument("--grid-hi", type=float, default=None)
        sp.add_argument("--grid-radius", type=float, default=3.0)
        sp.add_argument("--grid-res", type=int, default=41)

    sp = sub.add_parser("check", help="qualification + stationarity certificate search")
    add_common(sp)
    sp.add_argument("--candidate", type=int, default=0)
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--rational", action="store_true", help="force exact arithmetic")
    mode.add_argument("--float", action="store_true", help="force float arithmetic")
    sp.add_argument("--verify-derivatives", action="store_true")
    sp.add_argument("--output", default=None)
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("lower", help="grid solve of the lower level and phi0")
    add_common(sp)
    sp.add_argument("--x", required=True, help="comma-separated upper-level point")
    add_grid(sp)
    sp.set_defaults(fn=cmd_lower)

    sp = sub.add_parser("cone", help="normal-cone reports")
    add_common(sp)
    sp.add_argument("--which", choices=["omega", "K", "gph"], required=True)
    sp.add_argument("--point", default=None, help="comma list; for gph use 'y...;z...'")
    sp.add_argument("--candidate", type=int, default=0)
    sp.set_defaults(fn=cmd_cone)

    sp = sub.add_parser("verify", help="brute-force local-optimality check")
    add_common(sp)
    sp.add_argument("--candidate", type=int, default=0)
    sp.add_argument("--radius", type=float, default=0.5)
    sp.add_argument("--x-res", type=int, default=21)
    add_grid(sp)
    sp.set_defaults(fn=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
