"""Problem classes, feasible-set geometry, and certificate records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import DimensionError, ValidationError
from . import feasibility
from .feasibility import FEASIBLE, LinearSystem
from .expr import SmoothFunction, differentiate
from .ratlin import dot, frac, frac_mat, frac_vec

NEG_INF = float("-inf")
POS_INF = float("inf")


@dataclass(frozen=True)
class Polyhedron:
    """{v : A v <= b}; zero rows denote the whole space."""

    A: tuple
    b: tuple

    @classmethod
    def build(cls, A, b, dim=None):
        A = frac_mat(A)
        b = frac_vec(b)
        if len(A) != len(b):
            raise DimensionError("A and b row counts differ")
        if A and dim is not None and any(len(r) != dim for r in A):
            raise DimensionError("constraint row width differs from dimension")
        return cls(A, b)

    @classmethod
    def whole_space(cls, dim):
        p = cls((), ())
        object.__setattr__(p, "_dim", dim)
        return p

    def dim(self, fallback=None):
        if self.A:
            return len(self.A[0])
        return getattr(self, "_dim", fallback)

    @property
    def nrows(self):
        return len(self.A)

    def margin(self, v):
        """Max constraint violation at v (<= 0 means inside)."""
        if not self.A:
            return 0.0
        return max(float(dot(row, v) - bi) for row, bi in zip(self.A, self.b))

    def contains(self, v, tol=DEFAULT_TOLERANCES.active):
        return self.margin(frac_vec(v) if _rat(v) else v) <= tol

    def active_set(self, v, tol=DEFAULT_TOLERANCES.active):
        """Sorted indices of rows with A_i v >= b_i - tol."""
        vv = frac_vec(v) if _rat(v) else v
        return tuple(
            i
            for i in range(len(self.A))
            if float(self.b[i] - dot(self.A[i], vv)) <= tol
        )

    def is_empty(self, dim):
        if not self.A:
            return False
        sys = LinearSystem(
            nvars=dim, ineq_rows=self.A, ineq_rhs=self.b
        )
        return feasibility.feasible(sys, "rational").status != FEASIBLE


def _rat(v):
    return all(isinstance(x, (int, Fraction)) for x in v)


@dataclass(frozen=True)
class BoxSet:
    """Interval box; +-inf entries encode unbounded sides."""

    lower: tuple
    upper: tuple

    @classmethod
    def build(cls, lower, upper):
        if len(lower) != len(upper):
            raise DimensionError("box bound lengths differ")
        lo = tuple(NEG_INF if x == NEG_INF else frac(x) for x in lower)
        hi = tuple(POS_INF if x == POS_INF else frac(x) for x in upper)
        for i, (l, u) in enumerate(zip(lo, hi)):
            if l != NEG_INF and u != POS_INF and l > u:
                raise ValidationError([f"box coordinate {i + 1} has lower > upper"])
        return cls(lo, hi)

    @property
    def dim(self):
        return len(self.lower)

    def contains(self, y, tol=DEFAULT_TOLERANCES.active):
        for l, u, yi in zip(self.lower, self.upper, y):
            if l != NEG_INF and float(l - yi) > tol:
                return False
            if u != POS_INF and float(yi - u) > tol:
                return False
        return True

    def clamp(self, y):
        out = []
        for l, u, yi in zip(self.lower, self.upper, y):
            v = float(yi)
            if l != NEG_INF:
                v = max(v, float(l))
            if u != POS_INF:
                v = min(v, float(u))
            out.append(v)
        return tuple(out)

    def as_polyhedron(self):
        rows, rhs = [], []
        m = self.dim
        for i in range(m):
            if self.upper[i] != POS_INF:
                row = [Fraction(0)] * m
                row[i] = Fraction(1)
                rows.append(tuple(row))
                rhs.append(frac(self.upper[i]))
            if self.lower[i] != NEG_INF:
                row = [Fraction(0)] * m
                row[i] = Fraction(-1)
                rows.append(tuple(row))
                rhs.append(-frac(self.lower[i]))
        return Polyhedron(tuple(rows), tuple(rhs))


@dataclass(frozen=True)
class BilevelProblem:
    """Upper level min F over Omega, lower level min f over fixed K."""

    n: int
    m: int
    F: SmoothFunction
    f: SmoothFunction
    omega: Polyhedron
    K: object  # BoxSet or Polyhedron
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)

    @property
    def k_is_box(self):
        return isinstance(self.K, BoxSet)

    def lower_grad_exprs(self):
        """Symbolic gradient of f in the y variables (the equilibrium map)."""
        return [self.f.partial(0, self.n + j) for j in range(self.m)]


@dataclass(frozen=True)
class MpecProblem:
    """min objective s.t. 0 in G(x, y) + N_K(y), x in Omega."""

    n: int
    m: int
    objective: SmoothFunction
    G: SmoothFunction  # vector field on (x, y) with m components
    omega: Polyhedron
    K: object
    tolerances: Tolerances = field(default_factory=lambda: DEFAULT_TOLERANCES)

    @property
    def k_is_box(self):
        return isinstance(self.K, BoxSet)


@dataclass(frozen=True)
class Candidate:
    """Candidate point with the cached multiplier-side value z = -grad_y f."""

    x: tuple
    y: tuple
    z: tuple

    @property
    def point(self):
        return tuple(self.x) + tuple(self.y)


def make_candidate(problem: BilevelProblem, x, y, exact=True):
    x = frac_vec(x) if exact else tuple(float(v) for v in x)
    y = frac_vec(y) if exact else tuple(float(v) for v in y)
    point = x + y
    from .expr import evaluate

    z = tuple(-evaluate(g, point, exact) for g in problem.lower_grad_exprs())
    return Candidate(x, y, z)


def mpec_candidate(mpec: MpecProblem, x, y, exact=True):
    x = frac_vec(x) if exact else tuple(float(v) for v in x)
    y = frac_vec(y) if exact else tuple(float(v) for v in y)
    point = x + y
    vals = mpec.G.value(point, exact)
    if mpec.G.is_scalar:
        vals = [vals]
    return Candidate(x, y, tuple(-v for v in vals))


@dataclass
class MStationarityCertificate:
    """Multipliers witnessing the branch-wise stationarity system."""

    branch_label: str
    alpha: tuple  # identically zero for fixed K
    beta: tuple
    gamma: tuple
    eta: tuple
    mu: tuple  # nonneg multipliers for active Omega rows
    active_rows: tuple
    eq_residual: float
    cone_margin: float
    mode: str

    def as_dict(self):
        return {
            "branch": self.branch_label,
            "alpha": [_num_repr(v) for v in self.alpha],
            "beta": [_num_repr(v) for v in self.beta],
            "gamma": [_num_repr(v) for v in self.gamma],
            "eta": [_num_repr(v) for v in self.eta],
            "mu": [_num_repr(v) for v in self.mu],
            "active_rows": list(self.active_rows),
            "eq_residual": self.eq_residual,
            "cone_margin": self.cone_margin,
            "mode": self.mode,
        }


def _num_repr(v):
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def num_parse(v):
    if isinstance(v, str):
        return Fraction(v)
    return float(v)


@dataclass
class QualificationReport:
    holds: bool
    witness: tuple | None = None  # (x*, y*, z*) unit triple
    branch_label: str | None = None

    def as_dict(self):
        d = {"holds": self.holds}
        if not self.holds:
            d["witness"] = {
                "x": [float(v) for v in self.witness[0]],
                "y": [float(v) for v in self.witness[1]],
                "z": [float(v) for v in self.witness[2]],
            }
            d["branch"] = self.branch_label
        return d


def validate(problem: BilevelProblem):
    """Dimension, declaration, and nonemptiness checks; raises ValidationError."""
    errors = []
    n, m = problem.n, problem.m
    if n < 1 or m < 1:
        errors.append("dimensions must be positive")
    for name, fn in (("F", problem.F), ("f", problem.f)):
        if not fn.is_scalar:
            errors.append(f"{name} must be scalar")
        if fn.n != n or fn.m != m:
            errors.append(f"{name} declared over wrong dimensions")
        bad = [i for i in fn.components[0].variables() if i >= n + m]
        if bad:
            errors.append(f"{name} references undeclared variables")
    om_dim = problem.omega.dim(n)
    if problem.omega.A and om_dim != n:
        errors.append("Omega rows have wrong width")
    elif problem.omega.is_empty(n):
        errors.append("empty Omega")
    if isinstance(problem.K, BoxSet):
        if problem.K.dim != m:
            errors.append("K box has wrong dimension")
        # BoxSet.build already enforces lower <= upper, so K is nonempty.
    elif isinstance(problem.K, Polyhedron):
        if problem.K.A and problem.K.dim() != m:
            errors.append("K rows have wrong width")
        elif problem.K.is_empty(m):
            errors.append("empty K")
    else:
        errors.append("K must be a box or a polyhedron")
    if errors:
        raise ValidationError(errors)
    return problem


def to_mpec(problem: BilevelProblem) -> MpecProblem:
    """Equilibrium reformulation: objective F, G = grad_y f, sets carried over."""
    G = SmoothFunction(problem.lower_grad_exprs(), problem.n, problem.m)
    return MpecProblem(
        n=problem.n,
        m=problem.m,
        objective=problem.F,
        G=G,
        omega=problem.omega,
        K=problem.K,
        tolerances=problem.tolerances,
    )
