"""Linear feasibility and cone-nontriviality engine.

Phase-1 simplex with Bland's rule, in exact rational or floating arithmetic.
This backs both the per-branch stationarity systems and cone membership in
generator form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import PivotLimitError
from .ratlin import frac, frac_mat, frac_vec

FEASIBLE = "FEASIBLE"
INFEASIBLE = "INFEASIBLE"
ONLY_ZERO = "ONLY_ZERO"
NONZERO = "NONZERO"

FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class LinearSystem:
    """E v = g,  M v <= h,  v_i >= 0 for i in nonneg."""

    nvars: int
    eq_rows: tuple = ()
    eq_rhs: tuple = ()
    ineq_rows: tuple = ()
    ineq_rhs: tuple = ()
    nonneg: frozenset = frozenset()

    def __post_init__(self):
        for rows, rhs in ((self.eq_rows, self.eq_rhs), (self.ineq_rows, self.ineq_rhs)):
            assert len(rows) == len(rhs)
            for r in rows:
                assert len(r) == self.nvars

    def with_extra_eq(self, row, rhs):
        return LinearSystem(
            self.nvars,
            self.eq_rows + (tuple(row),),
            self.eq_rhs + (rhs,),
            self.ineq_rows,
            self.ineq_rhs,
            self.nonneg,
        )

    def residual(self, point):
        """Max violation of all rows at the point (0 means exactly feasible)."""
        worst = 0
        for row, rhs in zip(self.eq_rows, self.eq_rhs):
            worst = max(worst, abs(sum(a * x for a, x in zip(row, point)) - rhs))
        for row, rhs in zip(self.ineq_rows, self.ineq_rhs):
            worst = max(worst, sum(a * x for a, x in zip(row, point)) - rhs)
        for i in self.nonneg:
            worst = max(worst, -point[i])
        return worst


@dataclass(frozen=True)
class FeasResult:
    status: str
    point: tuple | None
    infeasibility: object  # phase-1 artificial optimum


def _convert(sys: LinearSystem, rational: bool):
    if rational:
        conv_rows = frac_mat
        conv_rhs = frac_vec
    else:
        conv_rows = lambda rows: tuple(tuple(float(x) for x in r) for r in rows)
        conv_rhs = lambda v: tuple(float(x) for x in v)
    return (
        conv_rows(sys.eq_rows),
        conv_rhs(sys.eq_rhs),
        conv_rows(sys.ineq_rows),
        conv_rhs(sys.ineq_rhs),
    )


def feasible(sys: LinearSystem, mode: str = "rational") -> FeasResult:
    """Phase-1 simplex with Bland's rule; deterministic basic solution."""
    rational = mode == "rational"
    eq_rows, eq_rhs, ineq_rows, ineq_rhs = _convert(sys, rational)
    zero = Fraction(0) if rational else 0.0
    one = Fraction(1) if rational else 1.0
    eps = Fraction(0) if rational else FLOAT_TOL

    # Column layout: split free variables, then slacks, then artificials.
    col_of_pos = []  # structural column -> (var index, sign)
    for j in range(sys.nvars):
        col_of_pos.append((j, 1))
        if j not in sys.nonneg:
            col_of_pos.append((j, -1))
    nstruct = len(col_of_pos)
    nslack = len(ineq_rows)

    rows = []
    rhs = []
    slack_sign = []
    for r, (row, b) in enumerate(zip(list(eq_rows) + list(ineq_rows), list(eq_rhs) + list(ineq_rhs))):
        is_ineq = r >= len(eq_rows)
        coeffs = [row[j] * s for (j, s) in col_of_pos]
        coeffs += [zero] * nslack
        if is_ineq:
            coeffs[nstruct + (r - len(eq_rows))] = one
        if b < 0:
            coeffs = [-c for c in coeffs]
            b = -b
        rows.append(coeffs)
        rhs.append(b)
        slack_sign.append(coeffs[nstruct + (r - len(eq_rows))] if is_ineq else zero)

    nrows = len(rows)
    basis = []
    art_cols = []
    for r in range(nrows):
        if slack_sign[r] == one:
            basis.append(nstruct + (r - len(eq_rows)))
        else:
            col = nstruct + nslack + len(art_cols)
            art_cols.append(col)
            basis.append(col)
    ncols = nstruct + nslack + len(art_cols)
    for r in range(nrows):
        ext = [zero] * len(art_cols)
        rows[r] = rows[r] + ext
    for k, col in enumerate(art_cols):
        r = next(i for i in range(nrows) if basis[i] == col)
        rows[r][col] = one

    # Tableau with appended rhs column; objective = sum of artificials.
    T = [rows[r] + [rhs[r]] for r in range(nrows)]
    obj = [zero] * (ncols + 1)
    for col in art_cols:
        obj[col] = one
    for r, bcol in enumerate(basis):
        if obj[bcol] != zero:
            f = obj[bcol]
            obj = [o - f * t for o, t in zip(obj, T[r])]

    max_pivots = 10 * (nrows + ncols)
    pivots = 0
    while True:
        enter = next((c for c in range(ncols) if obj[c] < -eps), None)
        if enter is None:
            break
        leave = None
        best = None
        for r in range(nrows):
            a = T[r][enter]
            if a > eps:
                ratio = T[r][-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    best = ratio
                    leave = r
        if leave is None:
            # Phase-1 objective is bounded below by 0; unboundedness here
            # means numerical trouble in float mode.
            raise PivotLimitError("phase-1 became unbounded")
        pivots += 1
        if pivots > max_pivots:
            raise PivotLimitError(f"pivot cap {max_pivots} exceeded")
        pv = T[leave][enter]
        T[leave] = [x / pv for x in T[leave]]
        for r in range(nrows):
            if r != leave and T[r][enter] != zero:
                f = T[r][enter]
                T[r] = [x - f * y for x, y in zip(T[r], T[leave])]
        if obj[enter] != zero:
            f = obj[enter]
            obj = [x - f * y for x, y in zip(obj, T[leave])]
        basis[leave] = enter

    opt = -obj[-1]
    tol = Fraction(0) if rational else FLOAT_TOL
    if opt > tol:
        return FeasResult(INFEASIBLE, None, opt)

    values = [zero] * ncols
    for r, bcol in enumerate(basis):
        values[bcol] = T[r][-1]
    point = [zero] * sys.nvars
    for pos, (j, s) in enumerate(col_of_pos):
        point[j] = point[j] + s * values[pos]
    return FeasResult(FEASIBLE, tuple(point), opt)


def min_norm_on_face(sys: LinearSystem, point, tol: float = FLOAT_TOL):
    """Least-norm point on the feasible face identified by the basic solution.

    Float-mode refinement only: fixes the active pattern of `point` and
    solves the equality-constrained least-norm problem.  Falls back to the
    input point when the refinement drifts off the feasible set.
    """
    import numpy as np

    p = np.array([float(x) for x in point])
    rows = [list(map(float, r)) for r in sys.eq_rows]
    rhs = [float(b) for b in sys.eq_rhs]
    for row, b in zip(sys.ineq_rows, sys.ineq_rhs):
        if abs(float(np.dot(list(map(float, row)), p)) - float(b)) <= tol:
            rows.append(list(map(float, row)))
            rhs.append(float(b))
    for i in sorted(sys.nonneg):
        if abs(p[i]) <= tol:
            row = [0.0] * sys.nvars
            row[i] = 1.0
            rows.append(row)
            rhs.append(0.0)
    if not rows:
        return tuple(0.0 for _ in point)
    C = np.array(rows)
    d = np.array(rhs)
    refined = np.linalg.pinv(C, rcond=1e-12) @ d
    if sys.residual(tuple(refined)) <= 10 * tol:
        return tuple(float(x) for x in refined)
    return tuple(float(x) for x in point)


def cone_nonzero(sys: LinearSystem, probe_indices=None, mode: str = "rational"):
    """Decide whether the homogeneous system admits a nonzero solution.

    Probes each variable (or the given subset) pinned to +-1 in turn; returns
    (NONZERO, unit_witness, probe_index) on first success or (ONLY_ZERO,
    None, None).
    """
    assert all(b == 0 for b in sys.eq_rhs) and all(b == 0 for b in sys.ineq_rhs)
    if probe_indices is None:
        probe_indices = range(sys.nvars)
    for i in probe_indices:
        for s in (1, -1):
            row = [0] * sys.nvars
            row[i] = s
            res = feasible(sys.with_extra_eq(row, 1), mode)
            if res.status == FEASIBLE:
                w = [float(x) for x in res.point]
                nrm = math.sqrt(sum(x * x for x in w))
                return NONZERO, tuple(x / nrm for x in w), i
    return ONLY_ZERO, None, None
