"""Derivative bundles, smooth coderivatives, and scalarized subdifferentials.

All derivatives are symbolic-first; finite differences are an optional
cross-check governed by the shared FDConfig.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .config import DEFAULT_FD, FDConfig
from .errors import BilevelCertError, DimensionError
from .expr import SmoothFunction, differentiate, evaluate
from .model import BilevelProblem, Candidate
from .cones import PolyhedralCone


@dataclass
class DerivativeBundle:
    """Gradient and Hessian blocks of (F, f) at a candidate point.

    xi1 = grad_x F, xi2 = grad_y F, gy = grad_y f,
    gyx = d(grad_y f)/dx (m x n), gyy = d(grad_y f)/dy (m x m).
    """

    xi1: tuple
    xi2: tuple
    gy: tuple
    gyx: tuple
    gyy: tuple
    exact: bool


def central_fd(e, point, index, fd: FDConfig = DEFAULT_FD):
    """Central finite difference of an expression tree, step per FDConfig."""
    p = [float(v) for v in point]
    h = fd.step(p[index])
    hi = list(p)
    lo = list(p)
    hi[index] += h
    lo[index] -= h
    return (evaluate(e, hi) - evaluate(e, lo)) / (2.0 * h)


def derivative_bundle(
    problem: BilevelProblem,
    cand: Candidate,
    exact: bool = True,
    verify: bool = False,
    fd: FDConfig = DEFAULT_FD,
) -> DerivativeBundle:
    """Evaluate every block the stationarity system needs at the candidate."""
    n, m = problem.n, problem.m
    point = cand.point

    def ev(e, block):
        try:
            return evaluate(e, point, exact)
        except BilevelCertError as err:
            raise type(err)(f"{block}: {err}") from err

    F0 = problem.F.components[0]
    f0 = problem.f.components[0]
    xi1 = tuple(ev(differentiate(F0, j), "grad_x F") for j in range(n))
    xi2 = tuple(ev(differentiate(F0, n + j), "grad_y F") for j in range(m))
    gy_exprs = problem.lower_grad_exprs()
    gy = tuple(ev(g, "grad_y f") for g in gy_exprs)
    gyx = tuple(
        tuple(ev(differentiate(g, j), "d(grad_y f)/dx") for j in range(n))
        for g in gy_exprs
    )
    gyy = tuple(
        tuple(ev(differentiate(g, n + j), "d(grad_y f)/dy") for j in range(m))
        for g in gy_exprs
    )
    bundle = DerivativeBundle(xi1, xi2, gy, gyx, gyy, exact)
    if verify:
        verify_bundle_fd(problem, cand, bundle, fd)
    return bundle


def verify_bundle_fd(problem, cand, bundle, fd: FDConfig = DEFAULT_FD):
    """Cross-check every bundle entry against central finite differences."""
    n, m = problem.n, problem.m
    point = cand.point
    F0 = problem.F.components[0]
    gy_exprs = problem.lower_grad_exprs()
    checks = []
    for j in range(n):
        checks.append((f"xi1[{j}]", bundle.xi1[j], central_fd(F0, point, j, fd)))
    for j in range(m):
        checks.append((f"xi2[{j}]", bundle.xi2[j], central_fd(F0, point, n + j, fd)))
    for i, g in enumerate(gy_exprs):
        for j in range(n):
            checks.append((f"gyx[{i}][{j}]", bundle.gyx[i][j], central_fd(g, point, j, fd)))
        for j in range(m):
            checks.append((f"gyy[{i}][{j}]", bundle.gyy[i][j], central_fd(g, point, n + j, fd)))
    for name, sym, num in checks:
        if abs(float(sym) - num) > fd.rel_tol * max(1.0, abs(num)):
            raise BilevelCertError(
                f"finite-difference check failed for {name}: {float(sym)} vs {num}"
            )


def hessian_symmetry_defect(bundle: DerivativeBundle) -> float:
    m = len(bundle.gyy)
    worst = 0.0
    for i in range(m):
        for j in range(m):
            worst = max(worst, abs(float(bundle.gyy[i][j]) - float(bundle.gyy[j][i])))
    return worst


def coderivative_smooth(h: SmoothFunction, point, ystar, exact: bool = False):
    """Adjoint-Jacobian coderivative of a smooth map: J(point)^T ystar.

    In finite dimensions the regular, mixed, and normal coderivatives of a
    smooth single-valued map all equal this singleton.
    """
    if len(ystar) != h.codim:
        raise DimensionError("dual vector length differs from codomain")
    jac = h.gradient(point, exact)
    d = h.n + h.m
    return tuple(
        sum(jac[c][j] * ystar[c] for c in range(h.codim)) for j in range(d)
    )


def scalarized_subdifferential(h: SmoothFunction, zstar, point, exact: bool = False):
    """Gradient of <zstar, h> at the point, via its own symbolic pass."""
    if len(zstar) != h.codim:
        raise DimensionError("dual vector length differs from codomain")
    from .expr import add, const, mul, ZERO

    scal = ZERO
    for c, w in zip(h.components, zstar):
        scal = add(scal, mul(const(Fraction(w)), c))  # exact for int/float/Fraction
    d = h.n + h.m
    return tuple(evaluate(differentiate(scal, j), point, exact) for j in range(d))


def singular_subdifferential_smooth(dim: int) -> PolyhedralCone:
    """Singular subdifferential of a locally Lipschitz function: always {0}."""
    return PolyhedralCone.zero(dim)
