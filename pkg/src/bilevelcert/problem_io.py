"""Strict problem-file and report serialization.

Problem files are JSON with a closed schema: unknown members are rejected so
a typo can never silently change the problem.  +-infinity is encoded with
the quoted sentinels "-inf" / "inf".
"""

from __future__ import annotations

import json
from fractions import Fraction

from .config import DEFAULT_TOLERANCES
from .errors import SchemaError
from .expr import SmoothFunction
from .model import (
    BilevelProblem,
    BoxSet,
    MStationarityCertificate,
    Polyhedron,
    num_parse,
    validate,
)

TOOL_NAME = "bilevelcert"
TOOL_VERSION = "0.1.0"

_TOP_KEYS = {"n", "m", "F", "f", "Omega", "K", "candidates", "tolerances"}
_REQUIRED = {"n", "m", "F", "f", "Omega", "K", "candidates"}
_TOL_KEYS = {"active", "residual", "cone", "branch_cap", "poly_row_cap"}


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaError(f"unknown member(s) {sorted(unknown)} in {where}")


def _number(v, where):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    raise SchemaError(f"{where} must be a number")


def _bound(v, where):
    if v == "inf":
        return float("inf")
    if v == "-inf":
        return float("-inf")
    return _number(v, where)


def _vector(v, where):
    if not isinstance(v, list):
        raise SchemaError(f"{where} must be an array")
    return tuple(_number(x, where) for x in v)


def _matrix(v, where):
    if not isinstance(v, list):
        raise SchemaError(f"{where} must be an array of rows")
    return tuple(_vector(r, where) for r in v)


def load_problem(path_or_dict):
    """Load and validate a problem file; returns (problem, candidates)."""
    if isinstance(path_or_dict, dict):
        doc = path_or_dict
    else:
        with open(path_or_dict) as fh:
            try:
                doc = json.load(fh, parse_float=Fraction)
            except json.JSONDecodeError as err:
                raise SchemaError(f"invalid JSON: {err}") from err
    _check_keys(doc, _TOP_KEYS, "problem file")
    missing = _REQUIRED - set(doc)
    if missing:
        raise SchemaError(f"missing member(s) {sorted(missing)}")

    n = doc["n"]
    m = doc["m"]
    if not isinstance(n, int) or not isinstance(m, int) or n < 1 or m < 1:
        raise SchemaError("n and m must be positive integers")
    if not isinstance(doc["F"], str) or not isinstance(doc["f"], str):
        raise SchemaError("F and f must be expression strings")

    _check_keys(doc["Omega"], {"A", "b"}, "Omega")
    omega = Polyhedron.build(
        _matrix(doc["Omega"].get("A", []), "Omega.A"),
        _vector(doc["Omega"].get("b", []), "Omega.b"),
        dim=n,
    )

    kdoc = doc["K"]
    if isinstance(kdoc, dict) and "box" in kdoc:
        _check_keys(kdoc, {"box"}, "K")
        _check_keys(kdoc["box"], {"lower", "upper"}, "K.box")
        box = kdoc["box"]
        if "lower" not in box or "upper" not in box:
            raise SchemaError("K.box needs lower and upper")
        lower = [_bound(v, "K.box.lower") for v in box["lower"]]
        upper = [_bound(v, "K.box.upper") for v in box["upper"]]
        K = BoxSet.build(lower, upper)
    else:
        _check_keys(kdoc, {"A", "b"}, "K")
        K = Polyhedron.build(
            _matrix(kdoc.get("A", []), "K.A"),
            _vector(kdoc.get("b", []), "K.b"),
            dim=m,
        )

    tols = DEFAULT_TOLERANCES
    if "tolerances" in doc:
        _check_keys(doc["tolerances"], _TOL_KEYS, "tolerances")
        tols = tols.override(
            **{k: float(v) if k in ("active", "residual", "cone") else int(v)
               for k, v in doc["tolerances"].items()}
        )

    from .errors import ParseError

    try:
        F = SmoothFunction.from_text(doc["F"], n, m)
        f = SmoothFunction.from_text(doc["f"], n, m)
    except ParseError as err:
        raise SchemaError(f"expression error: {err}") from err

    problem = BilevelProblem(n=n, m=m, F=F, f=f, omega=omega, K=K, tolerances=tols)
    validate(problem)

    cands = []
    if not isinstance(doc["candidates"], list):
        raise SchemaError("candidates must be an array")
    for i, c in enumerate(doc["candidates"]):
        _check_keys(c, {"x", "y"}, f"candidates[{i}]")
        x = _vector(c.get("x", []), f"candidates[{i}].x")
        y = _vector(c.get("y", []), f"candidates[{i}].y")
        if len(x) != n or len(y) != m:
            raise SchemaError(f"candidates[{i}] has wrong dimensions")
        cands.append((x, y))
    return problem, cands


def _render(v):
    """Fractions to exact strings; floats stay floats."""
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def vec_out(v):
    return [_render(x) for x in v]


def tolerances_out(tols):
    return {
        "active": tols.active,
        "residual": tols.residual,
        "cone": tols.cone,
        "branch_cap": tols.branch_cap,
        "poly_row_cap": tols.poly_row_cap,
    }


def cone_out(cone):
    return {
        "dim": cone.dim,
        "rays": [vec_out(r) for r in cone.rays],
        "lineality": [vec_out(l) for l in cone.lineality],
        "ineq": [vec_out(r) for r in cone.ineq],
        "eq": [vec_out(r) for r in cone.eq],
    }


def certificate_from_dict(d) -> MStationarityCertificate:
    """Reload a serialized certificate for independent re-verification."""
    return MStationarityCertificate(
        branch_label=d["branch"],
        alpha=tuple(num_parse(v) for v in d["alpha"]),
        beta=tuple(num_parse(v) for v in d["beta"]),
        gamma=tuple(num_parse(v) for v in d["gamma"]),
        eta=tuple(num_parse(v) for v in d["eta"]),
        mu=tuple(num_parse(v) for v in d["mu"]),
        active_rows=tuple(d["active_rows"]),
        eq_residual=float(d["eq_residual"]),
        cone_margin=float(d["cone_margin"]),
        mode=d["mode"],
    )


def dump_report(report, fh=None):
    text = json.dumps(report, indent=2)
    if fh is not None:
        fh.write(text + "\n")
    return text
