"""Exact polyhedral normal-cone calculus.

Covers normal cones to polyhedra and boxes and the limiting normal cone to
the graph of the normal-cone map y -> N_K(y), represented as a finite union
of convex polyhedral branches.  Branch enumeration is lazy with a cap;
ordering is deterministic.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from .config import DEFAULT_TOLERANCES
from .errors import (
    BranchCapExceededError,
    DimensionError,
    GraphMembershipError,
    PointNotInSetError,
)
from . import feasibility
from .feasibility import FEASIBLE, LinearSystem
from .ratlin import (
    cone_rays,
    dot,
    frac,
    frac_mat,
    frac_vec,
    halfspaces_from_generators,
    normalize_ray,
    rref,
)

# Per-coordinate branch tags for box graph cones.
LOWER_STRICT = "LOWER_STRICT"
LOWER_CORNER_REGULAR = "LOWER_CORNER_REGULAR"
INTERIOR = "INTERIOR"
UPPER_CORNER_REGULAR = "UPPER_CORNER_REGULAR"
UPPER_STRICT = "UPPER_STRICT"
CORNER_MIXED_LOWER = "CORNER_MIXED_LOWER"
CORNER_MIXED_UPPER = "CORNER_MIXED_UPPER"
FIXED = "FIXED"


class PolyhedralCone:
    """Convex polyhedral cone with generator and/or halfspace form.

    Generator form: cone(rays) + span(lineality).  Halfspace form:
    {v : ineq @ v <= 0, eq @ v = 0}.  Missing forms are derived on demand
    (small dimensions only).
    """

    def __init__(self, dim, rays=None, lineality=None, ineq=None, eq=None):
        if rays is None and ineq is None and eq is None:
            raise ValueError("cone needs at least one form")
        self.dim = dim
        self._rays = frac_mat(rays) if rays is not None else None
        self._lin = frac_mat(lineality) if lineality is not None else (
            () if rays is not None else None
        )
        self._ineq = frac_mat(ineq) if ineq is not None else None
        self._eq = frac_mat(eq) if eq is not None else (
            () if ineq is not None else None
        )

    @classmethod
    def zero(cls, dim):
        eye = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
        return cls(dim, rays=(), lineality=(), ineq=(), eq=eye)

    @classmethod
    def whole_space(cls, dim):
        eye = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
        lin = eye
        return cls(dim, rays=(), lineality=lin, ineq=(), eq=())

    @property
    def has_generators(self):
        return self._rays is not None

    @property
    def has_halfspaces(self):
        return self._ineq is not None

    @property
    def rays(self):
        if self._rays is None:
            lin, rays = cone_rays(self._ineq, self._eq, self.dim)
            self._lin, self._rays = tuple(lin), tuple(rays)
        return self._rays

    @property
    def lineality(self):
        self.rays  # force
        return self._lin

    @property
    def ineq(self):
        if self._ineq is None:
            ineq, eq = halfspaces_from_generators(self._rays, self._lin, self.dim)
            self._ineq, self._eq = tuple(ineq), tuple(eq)
        return self._ineq

    @property
    def eq(self):
        self.ineq  # force
        return self._eq

    def generators(self):
        """Rays plus +-lineality basis: a conic generating set."""
        gens = list(self.rays)
        for l in self.lineality:
            gens.append(l)
            gens.append(tuple(-x for x in l))
        return gens

    def contains(self, v, tol=DEFAULT_TOLERANCES.cone):
        """Membership with reported margin (max constraint violation)."""
        if len(v) != self.dim:
            raise DimensionError(f"vector dim {len(v)} != cone dim {self.dim}")
        if self.has_halfspaces:
            vv = frac_vec(v) if _is_rational(v) else tuple(float(x) for x in v)
            margin = 0
            for row in self._ineq:
                row = row if _is_rational(vv) else tuple(float(x) for x in row)
                margin = max(margin, dot(row, vv))
            for row in self._eq:
                row = row if _is_rational(vv) else tuple(float(x) for x in row)
                margin = max(margin, abs(dot(row, vv)))
            return float(margin) <= tol, float(margin)
        # Generator form: v = rays @ lam + lin @ mu, lam >= 0.
        gens = list(self.rays) + list(self.lineality) + [
            tuple(-x for x in l) for l in self.lineality
        ]
        k = len(gens)
        if k == 0:
            margin = max((abs(float(x)) for x in v), default=0.0)
            return margin <= tol, margin
        rational = _is_rational(v)
        rows = [[gens[j][i] for j in range(k)] for i in range(self.dim)]
        sys = LinearSystem(
            nvars=k,
            eq_rows=tuple(tuple(r) for r in rows),
            eq_rhs=tuple(v),
            nonneg=frozenset(range(len(self.rays))),
        )
        res = feasibility.feasible(sys, "rational" if rational else "float")
        margin = float(res.infeasibility)
        return res.status == FEASIBLE or margin <= tol, margin

    def is_subset_of(self, other, tol=0):
        """Exact containment: every generator satisfies the other's halfspaces."""
        return all(other.contains(g, tol)[0] for g in self.generators()) and all(
            other.contains(tuple(Fraction(0) for _ in range(self.dim)), tol)[0]
            for _ in (0,)
        )

    def embed(self, dim, offset):
        """Same cone placed into coordinates [offset, offset+self.dim)."""
        def pad_vec(v):
            out = [Fraction(0)] * dim
            for i, x in enumerate(v):
                out[offset + i] = x
            return tuple(out)

        kwargs = {}
        if self._rays is not None:
            kwargs["rays"] = tuple(pad_vec(r) for r in self._rays)
            kwargs["lineality"] = tuple(pad_vec(l) for l in self._lin)
        if self._ineq is not None:
            kwargs["ineq"] = tuple(pad_vec(r) for r in self._ineq)
            kwargs["eq"] = tuple(pad_vec(r) for r in self._eq)
        return PolyhedralCone(dim, **kwargs)

    def __repr__(self):
        parts = []
        if self._rays is not None:
            parts.append(f"rays={[tuple(map(str, r)) for r in self._rays]}")
            if self._lin:
                parts.append(f"lin={[tuple(map(str, l)) for l in self._lin]}")
        if self._ineq is not None:
            parts.append(f"ineq_rows={len(self._ineq)}, eq_rows={len(self._eq)}")
        return f"PolyhedralCone(dim={self.dim}, {', '.join(parts)})"


def _is_rational(v):
    return all(isinstance(x, (int, Fraction)) for x in v)


def cone_product(parts):
    """Product cone in the concatenated space; merges both available forms."""
    dims = [c.dim for c in parts]
    total = sum(dims)
    offset = 0
    rays, lin, ineq, eq = [], [], [], []
    all_gen = all(c.has_generators for c in parts)
    all_hs = all(c.has_halfspaces for c in parts)
    for c in parts:
        emb = c.embed(total, offset)
        if all_gen:
            rays.extend(emb._rays)
            lin.extend(emb._lin)
        if all_hs:
            ineq.extend(emb._ineq)
            eq.extend(emb._eq)
        offset += c.dim
    kwargs = {}
    if all_gen:
        kwargs["rays"] = tuple(rays)
        kwargs["lineality"] = tuple(lin)
    if all_hs:
        kwargs["ineq"] = tuple(ineq)
        kwargs["eq"] = tuple(eq)
    return PolyhedralCone(total, **kwargs)


def cone_contains(cone: PolyhedralCone, v, tol=DEFAULT_TOLERANCES.cone):
    """Functional alias for PolyhedralCone.contains."""
    return cone.contains(v, tol)


class ConeUnion:
    """Finite union of labelled convex polyhedral branches.

    Iteration is lazy and deterministic (lexicographic branch order); len()
    is known without materializing.
    """

    def __init__(self, factory, count):
        self._factory = factory
        self.count = count

    @classmethod
    def from_branches(cls, branches):
        branches = list(branches)
        labels = [lab for lab, _ in branches]
        assert branches and len(set(labels)) == len(labels)
        return cls(lambda: iter(branches), len(branches))

    def __iter__(self):
        return self._factory()

    def __len__(self):
        return self.count

    def branches(self):
        return list(self)

    def contains(self, v, tol=DEFAULT_TOLERANCES.cone):
        """(member, best margin, best branch label)."""
        best = None
        best_label = None
        for label, cone in self:
            ok, margin = cone.contains(v, tol)
            if best is None or margin < best:
                best, best_label = margin, label
            if ok:
                return True, margin, label
        return False, best, best_label

    def is_subset_of(self, other, tol=0):
        """Branch-wise containment: each branch inside a single other branch."""
        for _, cone in self:
            if not any(cone.is_subset_of(oc, tol) for _, oc in other):
                return False
        return True


# ---------------------------------------------------------------------------
# Normal cones to convex sets

def normal_cone_polyhedron(A, b, v, tol=DEFAULT_TOLERANCES.active):
    """Normal cone to {u : A u <= b} at v: nonneg combinations of active rows.

    For convex polyhedra the regular and limiting cones coincide.
    """
    A = frac_mat(A)
    b = frac_vec(b)
    d = len(v)
    vals = [dot(row, frac_vec(v)) for row in A]
    worst = max((float(val - bi) for val, bi in zip(vals, b)), default=0.0)
    if worst > tol:
        raise PointNotInSetError(f"point violates a constraint by {worst}")
    active = [i for i in range(len(A)) if float(b[i] - vals[i]) <= tol]
    rays = [A[i] for i in active]
    cone = PolyhedralCone(d, rays=rays, lineality=())
    cone.active_rows = tuple(active)
    return cone


def normal_cone_box(lower, upper, y, tol=DEFAULT_TOLERANCES.active):
    """Normal cone to a box: per-coordinate product of R_-, R_+, {0}, or R."""
    m = len(lower)
    if len(y) != m or len(upper) != m:
        raise DimensionError("box/point dimension mismatch")
    rays, lin, ineq, eq = [], [], [], []
    for i in range(m):
        lo, hi, yi = lower[i], upper[i], y[i]
        at_lo = lo != float("-inf") and float(yi - lo) <= tol
        at_hi = hi != float("inf") and float(hi - yi) <= tol
        if (lo != float("-inf") and float(lo - yi) > tol) or (
            hi != float("inf") and float(yi - hi) > tol
        ):
            raise PointNotInSetError(f"coordinate {i + 1} outside [{lo}, {hi}]")
        e = _unit(m, i)
        if at_lo and at_hi:  # pinched coordinate: contributes all of R
            lin.append(e)
        elif at_lo:
            rays.append(tuple(-x for x in e))
            ineq.append(e)
        elif at_hi:
            rays.append(e)
            ineq.append(tuple(-x for x in e))
        else:
            eq.append(e)
    return PolyhedralCone(m, rays=rays, lineality=lin, ineq=ineq, eq=eq)


def _unit(dim, i, value=1):
    v = [Fraction(0)] * dim
    v[i] = Fraction(value)
    return tuple(v)


# ---------------------------------------------------------------------------
# Limiting normal cone to gph N_K, box fast path

def _piece_vertical(label):
    """{0} x R in (y, z) coordinates."""
    return (
        label,
        dict(rays=(), lin=((Fraction(0), Fraction(1)),), ineq=(),
             eq=((Fraction(1), Fraction(0)),)),
    )


def _piece_horizontal(label):
    """R x {0}."""
    return (
        label,
        dict(rays=(), lin=((Fraction(1), Fraction(0)),), ineq=(),
             eq=((Fraction(0), Fraction(1)),)),
    )


def _piece_mixed(label, lower_side):
    """R_- x R_+ at a lower corner, R_+ x R_- at an upper corner."""
    s = 1 if lower_side else -1
    return (
        label,
        dict(
            rays=((Fraction(-s), Fraction(0)), (Fraction(0), Fraction(s))),
            lin=(),
            ineq=((Fraction(s), Fraction(0)), (Fraction(0), Fraction(-s))),
            eq=(),
        ),
    )


def _box_coordinate_cases(lo, hi, yi, zi, tol):
    """Branch list for one coordinate of gph N_K at (yi, zi)."""
    neg_inf = lo == float("-inf")
    pos_inf = hi == float("inf")
    if not neg_inf and not pos_inf and float(hi - lo) <= tol:
        return [_piece_horizontal(FIXED)]
    at_lo = not neg_inf and abs(float(yi - lo)) <= tol
    at_hi = not pos_inf and abs(float(hi - yi)) <= tol
    z_zero = abs(float(zi)) <= tol
    inside = (neg_inf or float(yi - lo) > tol) and (pos_inf or float(hi - yi) > tol)
    if inside:
        if not z_zero:
            raise GraphMembershipError(
                f"coordinate: z={zi} nonzero while y={yi} is interior"
            )
        return [_piece_vertical(INTERIOR)]
    if at_lo and not z_zero:
        if float(zi) > 0:
            raise GraphMembershipError(f"z={zi} has wrong sign at lower bound")
        return [_piece_horizontal(LOWER_STRICT)]
    if at_lo and z_zero:
        return [
            _piece_vertical(LOWER_CORNER_REGULAR),
            _piece_horizontal(LOWER_STRICT),
            _piece_mixed(CORNER_MIXED_LOWER, lower_side=True),
        ]
    if at_hi and not z_zero:
        if float(zi) < 0:
            raise GraphMembershipError(f"z={zi} has wrong sign at upper bound")
        return [_piece_horizontal(UPPER_STRICT)]
    if at_hi and z_zero:
        return [
            _piece_vertical(UPPER_CORNER_REGULAR),
            _piece_horizontal(UPPER_STRICT),
            _piece_mixed(CORNER_MIXED_UPPER, lower_side=False),
        ]
    raise PointNotInSetError(f"y={yi} outside [{lo}, {hi}]")


def limiting_normal_cone_gph_box(
    lower, upper, y, z, tol=DEFAULT_TOLERANCES.active,
    branch_cap=DEFAULT_TOLERANCES.branch_cap,
):
    """Limiting normal cone to gph N_K for a box K, at (y, z) with z in N_K(y).

    Lives in R^{2m}: first m coordinates are the y-block, last m the z-block.
    Branches are the products of per-coordinate cases, in lexicographic order.
    """
    m = len(lower)
    if not (len(upper) == len(y) == len(z) == m):
        raise DimensionError("box graph-point dimension mismatch")
    per_coord = [
        _box_coordinate_cases(lower[i], upper[i], y[i], z[i], tol) for i in range(m)
    ]
    count = 1
    for cases in per_coord:
        count *= len(cases)
    if count > branch_cap:
        raise BranchCapExceededError(f"{count} branches exceed cap {branch_cap}")

    def factory():
        for combo in itertools.product(*per_coord):
            label = ",".join(f"y{i + 1}:{tag}" for i, (tag, _) in enumerate(combo))
            rays, lin, ineq, eq = [], [], [], []
            for i, (_, piece) in enumerate(combo):
                for r in piece["rays"]:
                    rays.append(_embed2(r, m, i))
                for l in piece["lin"]:
                    lin.append(_embed2(l, m, i))
                for r in piece["ineq"]:
                    ineq.append(_embed2(r, m, i))
                for r in piece["eq"]:
                    eq.append(_embed2(r, m, i))
            yield label, PolyhedralCone(
                2 * m, rays=rays, lineality=lin, ineq=ineq, eq=eq
            )

    return ConeUnion(factory, count)


def _embed2(pair, m, i):
    """Place a (y, z) pair for coordinate i into R^{2m}."""
    v = [Fraction(0)] * (2 * m)
    v[i] = pair[0]
    v[m + i] = pair[1]
    return tuple(v)


# ---------------------------------------------------------------------------
# Limiting normal cone to gph N_K, general fixed polyhedron

def limiting_normal_cone_gph_polyhedron(
    A, b, y, z, tol=DEFAULT_TOLERANCES.active,
    row_cap=DEFAULT_TOLERANCES.poly_row_cap,
):
    """Limiting normal cone to gph N_K for K = {y : A y <= b}, at (y, z).

    The graph is a finite union of convex polyhedral pieces indexed by
    activity patterns; nearby patterns realizable arbitrarily close to (y, z)
    reduce to pairs of faces F2 <= F1 of the local cone
    {d : A_active d <= 0, <z, d> = 0}, each contributing the branch
    (F1 - F2)^polar x (F1 - F2).
    """
    A = frac_mat(A)
    b = frac_vec(b)
    m = len(y)
    if len(A) > row_cap:
        raise BranchCapExceededError(
            f"{len(A)} rows exceed cap {row_cap}; use the box fast path if K is a box"
        )
    yv = frac_vec(y) if _is_rational(y) else tuple(Fraction(float(v)) for v in y)
    zv = frac_vec(z) if _is_rational(z) else tuple(Fraction(float(v)) for v in z)
    vals = [dot(row, yv) for row in A]
    worst = max((float(v - bi) for v, bi in zip(vals, b)), default=0.0)
    if worst > tol:
        raise GraphMembershipError(f"y violates K by {worst}")
    active = [i for i in range(len(A)) if float(b[i] - vals[i]) <= tol]
    # z must be a nonneg combination of active rows
    gens = [A[i] for i in active]
    membership = PolyhedralCone(m, rays=gens, lineality=()).contains(zv, tol)
    if not membership[0]:
        raise GraphMembershipError(
            f"z is not in the normal cone at y (margin {membership[1]})"
        )

    crit_ineq = [A[i] for i in active]
    crit_eq = [zv] if any(x != 0 for x in zv) else []

    # Enumerate the distinct faces of the local cone: subsets of inequality
    # rows turned into equalities.
    faces = {}
    order = []
    for size in range(len(active) + 1):
        for subset in itertools.combinations(range(len(active)), size):
            eq_rows = [crit_ineq[i] for i in subset] + list(crit_eq)
            ineq_rows = [crit_ineq[i] for i in range(len(active)) if i not in subset]
            lin, rays = cone_rays(ineq_rows, eq_rows, m)
            sig = (tuple(lin), tuple(rays))
            if sig not in faces:
                faces[sig] = (tuple(lin), tuple(rays))
                order.append(sig)

    face_list = [faces[s] for s in order]

    def face_le(f_small, f_big):
        lin_b, rays_b = f_big
        big = PolyhedralCone(m, rays=rays_b, lineality=lin_b)
        lin_s, rays_s = f_small
        gens_s = list(rays_s) + list(lin_s) + [tuple(-x for x in l) for l in lin_s]
        return all(big.contains(g, 0)[0] for g in gens_s)

    branches = []
    seen = set()
    for i1, f1 in enumerate(face_list):
        for i2, f2 in enumerate(face_list):
            if not face_le(f2, f1):
                continue
            lin1, rays1 = f1
            lin2, rays2 = f2
            diff_rays = [r for r in rays1] + [tuple(-x for x in r) for r in rays2]
            diff_lin = list(lin1) + list(lin2)
            # Canonicalize the difference cone.
            d_ineq, d_eq = halfspaces_from_generators(diff_rays, diff_lin, m)
            d_lin, d_rays = cone_rays(d_ineq, d_eq, m)
            sig = (tuple(d_lin), tuple(d_rays))
            z_part = PolyhedralCone(
                m, rays=d_rays, lineality=d_lin, ineq=d_ineq, eq=d_eq
            )
            # Polar of the difference cone is the y-part.
            p_lin, p_rays = cone_rays(diff_rays, diff_lin, m)
            p_ineq, p_eq = halfspaces_from_generators(p_rays, p_lin, m)
            y_part = PolyhedralCone(
                m, rays=p_rays, lineality=p_lin, ineq=p_ineq, eq=p_eq
            )
            if sig in seen:
                continue
            seen.add(sig)
            label = _branch_label_from_sig(sig)
            branches.append((label, cone_product([y_part, z_part])))

    branches.sort(key=lambda t: t[0])
    return ConeUnion.from_branches(branches)


def _branch_label_from_sig(sig):
    lin, rays = sig
    lin_txt = ";".join(",".join(str(x) for x in v) for v in lin) or "-"
    ray_txt = ";".join(",".join(str(x) for x in v) for v in rays) or "-"
    return f"zpart[lin:{lin_txt}|rays:{ray_txt}]"
