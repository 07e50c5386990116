"""Assemble and decide the branch-wise stationarity and qualification systems.

Per branch of the limiting normal cone to gph N_K the multiplier system is
linear: with xi1 = grad_x F, xi2 = grad_y F, Jx/Jy the x/y Jacobian blocks
of the equilibrium map grad_y f,

    xi1 + Jx^T gamma + A_act^T mu = 0,   mu >= 0,
    xi2 + Jy^T gamma - beta       = 0,
    (-beta, -gamma) in branch cone.

K is independent of x here, so the x-block of the graph cone is {0} and the
alpha multiplier is identically zero.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .calculus import derivative_bundle
from .config import DEFAULT_TOLERANCES
from .errors import ExactArithmeticError, GraphMembershipError, StaleCertificateError
from . import feasibility
from .feasibility import FEASIBLE, NONZERO, LinearSystem, cone_nonzero, min_norm_on_face
from .cones import (
    ConeUnion,
    limiting_normal_cone_gph_box,
    limiting_normal_cone_gph_polyhedron,
)
from .model import (
    BilevelProblem,
    BoxSet,
    Candidate,
    MpecProblem,
    MStationarityCertificate,
    QualificationReport,
)

NOT_STATIONARY = "NOT_STATIONARY"
STATIONARY = "STATIONARY"


def graph_cone_union(problem, y, z, tols=None) -> ConeUnion:
    tols = tols or problem.tolerances
    if isinstance(problem.K, BoxSet):
        return limiting_normal_cone_gph_box(
            problem.K.lower, problem.K.upper, y, z,
            tol=tols.active, branch_cap=tols.branch_cap,
        )
    return limiting_normal_cone_gph_polyhedron(
        problem.K.A, problem.K.b, y, z,
        tol=tols.active, row_cap=tols.poly_row_cap,
    )


def _resolve_mode(mode, build_exact):
    """mode in {'auto', 'rational', 'float'} -> ('rational'|'float', bundle)."""
    if mode == "float":
        return "float", build_exact(False)
    if mode == "rational":
        return "rational", build_exact(True)
    try:
        return "rational", build_exact(True)
    except ExactArithmeticError:
        return "float", build_exact(False)


def _branch_system(xi_x, xi_y, Jx, Jy, act_rows, branch_cone):
    """LinearSystem over unknowns [beta (m), gamma (m), mu (q)]."""
    n = len(xi_x)
    m = len(xi_y)
    q = len(act_rows)
    nv = 2 * m + q
    eq_rows, eq_rhs = [], []
    for j in range(n):
        row = [0] * nv
        for i in range(m):
            row[m + i] = Jx[i][j]
        for k in range(q):
            row[2 * m + k] = act_rows[k][j]
        eq_rows.append(tuple(row))
        eq_rhs.append(-xi_x[j])
    for j in range(m):
        row = [0] * nv
        row[j] = -1
        for i in range(m):
            row[m + i] = Jy[i][j]
        eq_rows.append(tuple(row))
        eq_rhs.append(-xi_y[j])
    ineq_rows, ineq_rhs = [], []
    for r in branch_cone.ineq:
        row = [0] * nv
        for j in range(m):
            row[j] = -r[j]
            row[m + j] = -r[m + j]
        ineq_rows.append(tuple(row))
        ineq_rhs.append(0)
    for r in branch_cone.eq:
        row = [0] * nv
        for j in range(m):
            row[j] = -r[j]
            row[m + j] = -r[m + j]
        eq_rows.append(tuple(row))
        eq_rhs.append(0)
    return LinearSystem(
        nvars=nv,
        eq_rows=tuple(eq_rows),
        eq_rhs=tuple(eq_rhs),
        ineq_rows=tuple(ineq_rows),
        ineq_rhs=tuple(ineq_rhs),
        nonneg=frozenset(range(2 * m, nv)),
    )


def _certificate_from_solution(
    label, point, n, m, act_rows, active, xi_x, xi_y, Jx, Jy, branch_cone, mode, tols
):
    beta = tuple(point[:m])
    gamma = tuple(point[m:2 * m])
    mu = tuple(point[2 * m:])
    zero = Fraction(0) if mode == "rational" else 0.0
    eta = tuple(
        sum((act_rows[k][j] * mu[k] for k in range(len(mu))), zero)
        for j in range(n)
    )
    r1 = [
        float(xi_x[j] + sum(Jx[i][j] * gamma[i] for i in range(m)) + eta[j])
        for j in range(n)
    ]
    r2 = [
        float(xi_y[j] + sum(Jy[i][j] * gamma[i] for i in range(m)) - beta[j])
        for j in range(m)
    ]
    eq_residual = max([abs(v) for v in r1 + r2], default=0.0)
    neg = tuple(-b for b in beta) + tuple(-g for g in gamma)
    _, margin = branch_cone.contains(neg, tols.cone)
    return MStationarityCertificate(
        branch_label=label,
        alpha=tuple(Fraction(0) if mode == "rational" else 0.0 for _ in range(n)),
        beta=beta,
        gamma=gamma,
        eta=eta,
        mu=mu,
        active_rows=active,
        eq_residual=eq_residual,
        cone_margin=float(margin),
        mode=mode,
    )


def _solve_stationarity(n, m, xi_x, xi_y, Jx, Jy, omega, xbar, union, mode, tols):
    active = omega.active_set(xbar, tols.active)
    act_rows = [omega.A[i] for i in active]
    for label, branch_cone in union:
        sys = _branch_system(xi_x, xi_y, Jx, Jy, act_rows, branch_cone)
        res = feasibility.feasible(sys, mode)
        if res.status == FEASIBLE:
            point = res.point
            if mode == "float":
                point = min_norm_on_face(sys, point)
            return _certificate_from_solution(
                label, point, n, m, act_rows, active,
                xi_x, xi_y, Jx, Jy, branch_cone, mode, tols,
            )
    return None


def check_m_stationarity(
    problem: BilevelProblem, cand: Candidate, mode: str = "auto", verify_derivatives=False
):
    """Search all graph-cone branches for a multiplier certificate.

    Returns an MStationarityCertificate, or None when every branch is
    infeasible (the candidate is not M-stationary).
    """
    tols = problem.tolerances

    def build(exact):
        return derivative_bundle(problem, cand, exact=exact, verify=verify_derivatives)

    used_mode, bundle = _resolve_mode(mode, build)
    _check_z_consistency(cand, bundle)
    z = tuple(-g for g in bundle.gy)
    union = graph_cone_union(problem, cand.y, z, tols)
    return _solve_stationarity(
        problem.n, problem.m, bundle.xi1, bundle.xi2, bundle.gyx, bundle.gyy,
        problem.omega, cand.x, union, used_mode, tols,
    )


def _check_z_consistency(cand, bundle, tol=1e-12):
    drift = max(
        (abs(float(z) + float(g)) for z, g in zip(cand.z, bundle.gy)), default=0.0
    )
    if drift > tol:
        raise GraphMembershipError(
            f"cached z drifts from -grad_y f by {drift}; rebuild the candidate"
        )


def check_mpec_stationarity(mpec: MpecProblem, cand: Candidate, mode: str = "auto"):
    """Branch-wise certificate search for the equilibrium-constrained form."""
    tols = mpec.tolerances
    n, m = mpec.n, mpec.m

    def build(exact):
        obj = mpec.objective.components[0]
        from .expr import differentiate, evaluate

        point = cand.point
        xi_x = tuple(evaluate(differentiate(obj, j), point, exact) for j in range(n))
        xi_y = tuple(
            evaluate(differentiate(obj, n + j), point, exact) for j in range(m)
        )
        jac = mpec.G.gradient(point, exact)
        Jx = tuple(tuple(jac[i][j] for j in range(n)) for i in range(m))
        Jy = tuple(tuple(jac[i][n + j] for j in range(m)) for i in range(m))
        gvals = mpec.G.value(point, exact)
        if mpec.G.is_scalar:
            gvals = [gvals]
        return xi_x, xi_y, Jx, Jy, gvals

    used_mode, (xi_x, xi_y, Jx, Jy, gvals) = _resolve_mode(mode, build)
    drift = max((abs(float(z) + float(g)) for z, g in zip(cand.z, gvals)), default=0.0)
    if drift > 1e-12:
        raise GraphMembershipError(f"cached z drifts from -G by {drift}")
    z = tuple(-g for g in gvals)
    union = graph_cone_union(mpec, cand.y, z, tols)
    return _solve_stationarity(
        n, m, xi_x, xi_y, Jx, Jy, mpec.omega, cand.x, union, used_mode, tols
    )


def check_qualification(
    problem: BilevelProblem, cand: Candidate, mode: str = "auto"
) -> QualificationReport:
    """Decide whether the homogeneous multiplier system admits only zero.

    Per branch: x* is forced to 0 (fixed K), y* = Jy^T z*, and
    0 = Jx^T z* + A_act^T mu with (-y*, -z*) in the branch cone; the
    candidate qualifies when every branch admits only (0, 0, 0).
    """
    tols = problem.tolerances

    def build(exact):
        return derivative_bundle(problem, cand, exact=exact)

    used_mode, bundle = _resolve_mode(mode, build)
    z = tuple(-g for g in bundle.gy)
    union = graph_cone_union(problem, cand.y, z, tols)
    n, m = problem.n, problem.m
    active = problem.omega.active_set(cand.x, tols.active)
    act_rows = [problem.omega.A[i] for i in active]
    q = len(act_rows)
    Jx, Jy = bundle.gyx, bundle.gyy

    for label, branch_cone in union:
        nv = 2 * m + q  # unknowns [y* (m), z* (m), mu (q)]
        eq_rows, eq_rhs = [], []
        for j in range(n):
            row = [0] * nv
            for i in range(m):
                row[m + i] = Jx[i][j]
            for k in range(q):
                row[2 * m + k] = act_rows[k][j]
            eq_rows.append(tuple(row))
            eq_rhs.append(0)
        for j in range(m):
            row = [0] * nv
            row[j] = -1
            for i in range(m):
                row[m + i] = Jy[i][j]
            eq_rows.append(tuple(row))
            eq_rhs.append(0)
        ineq_rows, ineq_rhs = [], []
        for r in branch_cone.ineq:
            row = [0] * nv
            for j in range(2 * m):
                row[j] = -r[j]
            ineq_rows.append(tuple(row))
            ineq_rhs.append(0)
        for r in branch_cone.eq:
            row = [0] * nv
            for j in range(2 * m):
                row[j] = -r[j]
            eq_rows.append(tuple(row))
            eq_rhs.append(0)
        sys = LinearSystem(
            nvars=nv,
            eq_rows=tuple(eq_rows),
            eq_rhs=tuple(eq_rhs),
            ineq_rows=tuple(ineq_rows),
            ineq_rhs=tuple(ineq_rhs),
            nonneg=frozenset(range(2 * m, nv)),
        )
        status, witness, _ = cone_nonzero(sys, probe_indices=range(2 * m), mode=used_mode)
        if status == NONZERO:
            ystar = witness[:m]
            zstar = witness[m:2 * m]
            nrm = math.sqrt(sum(v * v for v in ystar + zstar))
            ystar = tuple(v / nrm for v in ystar)
            zstar = tuple(v / nrm for v in zstar)
            return QualificationReport(
                holds=False,
                witness=(tuple(0.0 for _ in range(n)), ystar, zstar),
                branch_label=label,
            )
    return QualificationReport(holds=True)


# ---------------------------------------------------------------------------
# Independent certificate recomputation

_TAG_TEXT = {
    "INTERIOR": "interior, branch {0}xR",
    "LOWER_STRICT": "lower bound, strict branch Rx{0}",
    "UPPER_STRICT": "upper bound, strict branch Rx{0}",
    "LOWER_CORNER_REGULAR": "lower-corner, regular branch {0}xR",
    "UPPER_CORNER_REGULAR": "upper-corner, regular branch {0}xR",
    "CORNER_MIXED_LOWER": "lower-corner, mixed branch R-xR+",
    "CORNER_MIXED_UPPER": "upper-corner, mixed branch R+xR-",
    "FIXED": "pinned coordinate, branch Rx{0}",
}


def describe_branch(label: str):
    parts = []
    for chunk in label.split(","):
        if ":" not in chunk:
            return [f"polyhedral branch {label}"]
        coord, tag = chunk.split(":", 1)
        text = _TAG_TEXT.get(tag, tag)
        parts.append(f"coordinate {coord.lstrip('y')}: {text}")
    return parts


def explain_certificate(problem: BilevelProblem, cand: Candidate,
                        cert: MStationarityCertificate):
    """Recompute residuals and cone margins from scratch in float arithmetic.

    This is a deliberately separate code path from the simplex solver: plain
    dot products on the float bundle.  Raises StaleCertificateError when any
    residual exceeds tolerance.
    """
    tols = problem.tolerances
    bundle = derivative_bundle(problem, cand, exact=False)
    n, m = problem.n, problem.m
    beta = [float(v) for v in cert.beta]
    gamma = [float(v) for v in cert.gamma]
    mu = [float(v) for v in cert.mu]
    problems = []
    if any(float(a) != 0.0 for a in cert.alpha):
        problems.append("alpha must be identically zero for fixed K")
    if any(v < -tols.residual for v in mu):
        problems.append("negative mu entry")
    act_rows = [[float(x) for x in problem.omega.A[i]] for i in cert.active_rows]
    eta_re = [
        sum(act_rows[k][j] * mu[k] for k in range(len(mu))) for j in range(n)
    ]
    eta_drift = max(
        (abs(eta_re[j] - float(cert.eta[j])) for j in range(n)), default=0.0
    )
    if eta_drift > tols.residual:
        problems.append(f"eta differs from A_act^T mu by {eta_drift}")
    r1 = [
        float(bundle.xi1[j])
        + sum(float(bundle.gyx[i][j]) * gamma[i] for i in range(m))
        + eta_re[j]
        for j in range(n)
    ]
    r2 = [
        float(bundle.xi2[j])
        + sum(float(bundle.gyy[i][j]) * gamma[i] for i in range(m))
        - beta[j]
        for j in range(m)
    ]
    eq_residual = max([abs(v) for v in r1 + r2], default=0.0)
    z = tuple(-g for g in bundle.gy)
    union = graph_cone_union(problem, cand.y, z, tols)
    branch_cone = None
    for label, cone in union:
        if label == cert.branch_label:
            branch_cone = cone
            break
    if branch_cone is None:
        raise StaleCertificateError(f"branch {cert.branch_label!r} no longer exists")
    member, cone_margin = branch_cone.contains(
        tuple(-b for b in beta) + tuple(-g for g in gamma), tols.cone
    )
    if eq_residual > tols.residual:
        problems.append(f"equation residual {eq_residual} exceeds {tols.residual}")
    if not member:
        problems.append(f"cone margin {cone_margin} exceeds {tols.cone}")
    if problems:
        raise StaleCertificateError("; ".join(problems))
    return {
        "branch": cert.branch_label,
        "branch_description": describe_branch(cert.branch_label),
        "eq_residual": eq_residual,
        "cone_margin": float(cone_margin),
        "ok": True,
    }
