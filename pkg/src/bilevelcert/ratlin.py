"""Small exact linear algebra over fractions: rref, nullspace, ray enumeration.

Everything here is deliberately dense-and-tiny; cones in this toolkit live in
dimension at most a couple dozen and constraint counts are capped upstream.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from math import gcd


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x)


def frac_vec(v):
    return tuple(frac(x) for x in v)


def frac_mat(rows):
    return tuple(frac_vec(r) for r in rows)


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def mat_vec(rows, v):
    return tuple(dot(r, v) for r in rows)


def rref(rows):
    """Reduced row echelon form; returns (rows, pivot_columns)."""
    mat = [list(r) for r in rows]
    if not mat:
        return [], []
    ncols = len(mat[0])
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(mat)) if mat[i][c] != 0), None)
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == len(mat):
            break
    return [tuple(row) for row in mat[:r]], pivots


def rank(rows):
    return len(rref(rows)[0])


def nullspace(rows, dim):
    """Basis of the nullspace of the given rows (each of length dim)."""
    reduced, pivots = rref(rows)
    free = [c for c in range(dim) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * dim
        v[fc] = Fraction(1)
        for ri, pc in enumerate(pivots):
            v[pc] = -reduced[ri][fc]
        basis.append(tuple(v))
    return basis


def normalize_ray(v):
    """Scale to coprime integers; sign preserved. Returns None for zero."""
    if all(x == 0 for x in v):
        return None
    from functools import reduce

    den = reduce(lambda a, b: a * b // gcd(a, b), (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(gcd, (abs(i) for i in ints))
    return tuple(Fraction(i // g) for i in ints)


def canonical_lineality(basis, dim):
    """Canonical signature of a linear span: rref rows, integer-normalized."""
    if not basis:
        return ()
    reduced, _ = rref(basis)
    return tuple(normalize_ray(r) for r in reduced)


def reduce_mod_span(v, span_rref_rows, span_pivots):
    """Subtract the span component indicated by rref pivot columns."""
    v = list(v)
    for row, pc in zip(span_rref_rows, span_pivots):
        if v[pc] != 0:
            f = v[pc]
            v = [a - f * b for a, b in zip(v, row)]
    return tuple(v)


def cone_rays(ineq, eq, dim):
    """Generator description of {v : ineq @ v <= 0, eq @ v = 0}.

    Returns (lineality_basis, extreme_rays), all exact.  Rays are canonical
    (coprime integer entries) and reduced modulo the lineality span, so equal
    cones produce equal outputs.  Brute force over active-row subsets; fine
    for the capped sizes used here.
    """
    ineq = frac_mat(ineq)
    eq = frac_mat(eq)
    lin = nullspace(list(ineq) + list(eq), dim)
    lin_rref, lin_pivots = rref(lin)
    t = len(lin)
    rays = []
    if t == dim:
        return [tuple(r) for r in lin_rref] or [], []
    seen = set()
    nrows = len(ineq)
    for size in range(nrows + 1):
        for subset in combinations(range(nrows), size):
            rows = [ineq[i] for i in subset] + list(eq)
            ns = nullspace(rows, dim)
            if len(ns) != t + 1:
                continue
            w = None
            for cand in ns:
                red = reduce_mod_span(cand, lin_rref, lin_pivots)
                if any(x != 0 for x in red):
                    w = red
                    break
            if w is None:
                continue
            w = normalize_ray(w)
            for sign in (1, -1):
                cand = tuple(sign * x for x in w)
                if all(dot(row, cand) <= 0 for row in ineq):
                    if cand not in seen:
                        seen.add(cand)
                        rays.append(cand)
    rays.sort()
    lin_out = [tuple(r) for r in lin_rref]
    return lin_out, rays


def halfspaces_from_generators(rays, lineality, dim):
    """Inequality/equality description of cone(rays) + span(lineality).

    Computed as the generator description of the polar, then dualized back.
    Returns (ineq_rows, eq_rows) with  ineq @ v <= 0,  eq @ v = 0.
    """
    # polar = {u : <r, u> <= 0 for rays r, <l, u> = 0 for lineality l}
    pol_lin, pol_rays = cone_rays(rays, lineality, dim)
    return [tuple(r) for r in pol_rays], [tuple(l) for l in pol_lin]
