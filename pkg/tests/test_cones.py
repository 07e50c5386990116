from fractions import Fraction

import pytest

from bilevelcert.cones import (
    CORNER_MIXED_LOWER,
    INTERIOR,
    LOWER_CORNER_REGULAR,
    LOWER_STRICT,
    UPPER_CORNER_REGULAR,
    UPPER_STRICT,
    ConeUnion,
    PolyhedralCone,
    cone_product,
    limiting_normal_cone_gph_box,
    limiting_normal_cone_gph_polyhedron,
    normal_cone_box,
    normal_cone_polyhedron,
)
from bilevelcert.errors import (
    BranchCapExceededError,
    GraphMembershipError,
    PointNotInSetError,
)

F = Fraction
INF = float("inf")


def rays_of(cone):
    return sorted(tuple(r) for r in cone.rays)


def same_cone(a, b):
    return a.is_subset_of(b) and b.is_subset_of(a)


# -- normal cones to convex sets --------------------------------------------

def test_normal_cone_interior_is_zero():
    cone = normal_cone_polyhedron(((F(1), F(0)),), (F(1),), (F(0), F(0)))
    assert same_cone(cone, PolyhedralCone.zero(2))


def test_normal_cone_halfspace_boundary():
    cone = normal_cone_polyhedron(((F(1), F(0)),), (F(0),), (F(0), F(5)))
    assert rays_of(cone) == [(F(1), F(0))]
    assert not cone.lineality


def test_normal_cone_simplex_vertex_generators():
    # K = {y1 + y2 <= 1, -y1 <= 0, -y2 <= 0} at the vertex (1, 0).
    A = ((F(1), F(1)), (F(-1), F(0)), (F(0), F(-1)))
    b = (F(1), F(0), F(0))
    cone = normal_cone_polyhedron(A, b, (F(1), F(0)))
    expected = PolyhedralCone(2, rays=((F(1), F(1)), (F(0), F(-1))))
    assert same_cone(cone, expected)


def test_normal_cone_point_outside_raises():
    with pytest.raises(PointNotInSetError):
        normal_cone_polyhedron(((F(1),),), (F(0),), (F(1),))


def test_normal_cone_box_cases():
    lo, hi = (F(0), F(-1)), (F(1), F(1))
    # interior x interior: {0}.
    c = normal_cone_box(lo, hi, (F(1, 2), F(0)))
    assert same_cone(c, PolyhedralCone.zero(2))
    # at (0, 1): R_- x R_+.
    c = normal_cone_box(lo, hi, (F(0), F(1)))
    assert same_cone(
        c, PolyhedralCone(2, rays=((F(-1), F(0)), (F(0), F(1))))
    )


def test_normal_cone_box_matches_polyhedron_form():
    from bilevelcert.model import BoxSet

    box = BoxSet.build([0, -1], [1, 1])
    poly = box.as_polyhedron()
    A, b = poly.A, poly.b
    for pt in [(F(0), F(0)), (F(1), F(1)), (F(1, 2), F(-1)), (F(1, 2), F(1, 2))]:
        assert same_cone(
            normal_cone_box(box.lower, box.upper, pt),
            normal_cone_polyhedron(A, b, pt),
        )


def test_normal_cone_box_pinned_coordinate():
    c = normal_cone_box((F(2),), (F(2),), (F(2),))
    assert same_cone(c, PolyhedralCone.whole_space(1))


# -- cone algebra ------------------------------------------------------------

def test_cone_contains_margins():
    c = PolyhedralCone(2, ineq=((F(-1), F(0)), (F(0), F(-1))))  # R+^2
    ok, margin = c.contains((1, 1))
    assert ok and margin == 0
    ok, margin = c.contains((-2, 0))
    assert not ok and margin == pytest.approx(2.0)


def test_cone_contains_generator_form():
    c = PolyhedralCone(2, rays=((F(1), F(1)),), lineality=((F(1), F(-1)),))
    assert c.contains((F(3), F(-1)))[0]  # 2*(1,1) + 1*(1,-1)... actually (3,-1)
    assert not c.contains((F(-1), F(-1)))[0]


def test_cone_product_is_cartesian():
    a = PolyhedralCone(1, rays=((F(1),),))          # R_+
    b = PolyhedralCone(1, lineality=((F(1),),), rays=())  # R
    p = cone_product([a, b])
    assert p.dim == 2
    assert p.contains((F(2), F(-5)))[0]
    assert not p.contains((F(-1), F(0)))[0]


def test_is_subset_of_strict():
    small = PolyhedralCone(2, rays=((F(1), F(0)),))
    big = PolyhedralCone(2, ineq=((F(0), F(-1)),))  # upper half-plane
    assert small.is_subset_of(big)
    assert not big.is_subset_of(small)


def test_form_round_trip():
    # halfspace -> rays -> halfspace keeps the same set.
    c = PolyhedralCone(3, ineq=((F(-1), F(0), F(0)), (F(0), F(-1), F(1))))
    again = PolyhedralCone(3, rays=c.rays, lineality=c.lineality)
    assert same_cone(c, again)


# -- limiting normal cone to gph N_K, box case -------------------------------

def branch_labels(union):
    return [label for label, _ in union]


def test_gph_box_interior_single_branch():
    union = limiting_normal_cone_gph_box((F(0),), (F(1),), (F(1, 2),), (F(0),))
    assert branch_labels(union) == [f"y1:{INTERIOR}"]
    (_, cone), = union
    assert same_cone(cone, PolyhedralCone(2, rays=(), lineality=((F(0), F(1)),)))


def test_gph_box_lower_strict():
    union = limiting_normal_cone_gph_box((F(0),), (INF,), (F(0),), (F(-3),))
    assert branch_labels(union) == [f"y1:{LOWER_STRICT}"]
    (_, cone), = union
    assert same_cone(cone, PolyhedralCone(2, rays=(), lineality=((F(1), F(0)),)))


def test_gph_box_lower_corner_branches():
    union = limiting_normal_cone_gph_box((F(0),), (INF,), (F(0),), (F(0),))
    assert branch_labels(union) == [
        f"y1:{LOWER_CORNER_REGULAR}",
        f"y1:{LOWER_STRICT}",
        f"y1:{CORNER_MIXED_LOWER}",
    ]
    cones = dict(union.branches())
    assert same_cone(
        cones[f"y1:{LOWER_CORNER_REGULAR}"],
        PolyhedralCone(2, rays=(), lineality=((F(0), F(1)),)),
    )
    assert same_cone(
        cones[f"y1:{CORNER_MIXED_LOWER}"],
        PolyhedralCone(2, rays=((F(-1), F(0)), (F(0), F(1)))),
    )


def test_gph_box_upper_cases_mirror_lower():
    union = limiting_normal_cone_gph_box((-INF,), (F(1),), (F(1),), (F(2),))
    assert branch_labels(union) == [f"y1:{UPPER_STRICT}"]
    union = limiting_normal_cone_gph_box((-INF,), (F(1),), (F(1),), (F(0),))
    assert len(union) == 3
    assert branch_labels(union)[0] == f"y1:{UPPER_CORNER_REGULAR}"


def test_gph_box_product_structure_and_count():
    lo = (F(0), F(0))
    hi = (INF, INF)
    union = limiting_normal_cone_gph_box(lo, hi, (F(0), F(0)), (F(0), F(0)))
    assert len(union) == 9  # 3 branches per corner coordinate
    labels = branch_labels(union)
    assert labels[0] == f"y1:{LOWER_CORNER_REGULAR},y2:{LOWER_CORNER_REGULAR}"
    assert len(set(labels)) == 9
    # Every branch contains zero; cones live in R^{2m} with y-block first.
    zero = (F(0),) * 4
    for _, cone in union:
        assert cone.dim == 4
        assert cone.contains(zero)[0]


def test_gph_box_membership_outside_graph():
    # z not in N_K(y) is a graph violation; y outside K is a set violation.
    with pytest.raises(GraphMembershipError):
        limiting_normal_cone_gph_box((F(0),), (INF,), (F(1),), (F(2),))
    with pytest.raises(PointNotInSetError):
        limiting_normal_cone_gph_box((F(0),), (F(1),), (F(-1),), (F(0),))


def test_gph_box_branch_cap():
    lo = tuple(F(0) for _ in range(13))
    hi = tuple(INF for _ in range(13))
    z = tuple(F(0) for _ in range(13))
    with pytest.raises(BranchCapExceededError):
        limiting_normal_cone_gph_box(lo, hi, lo, z)


def test_gph_union_nonconvex_at_complementarity_corner():
    # (1, 0) and (0, 1) are members, their midpoint is not: the union is
    # not a convex set.
    union = limiting_normal_cone_gph_box((F(0),), (INF,), (F(0),), (F(0),))
    a = (F(1), F(0))
    b = (F(0), F(1))
    mid = tuple((p + q) / 2 for p, q in zip(a, b))
    assert union.contains(a)[0]
    assert union.contains(b)[0]
    assert not union.contains(mid)[0]
    # The mixed branch makes the midpoint of (-1,0) and (0,1) a member.
    assert union.contains((F(-1, 2), F(1, 2)))[0]


# -- limiting normal cone, general polyhedral K ------------------------------

def test_gph_polyhedron_matches_box_halfline():
    # K = [0, inf) as a polyhedron {-y <= 0}.
    A = ((F(-1),),)
    b = (F(0),)
    for y, z in [((F(1),), (F(0),)), ((F(0),), (F(-2),)), ((F(0),), (F(0),))]:
        ub = limiting_normal_cone_gph_box((F(0),), (INF,), y, z)
        up = limiting_normal_cone_gph_polyhedron(A, b, y, z)
        assert ub.is_subset_of(up)
        assert up.is_subset_of(ub)


def test_gph_polyhedron_matches_box_square():
    A = (
        (F(-1), F(0)), (F(1), F(0)),
        (F(0), F(-1)), (F(0), F(1)),
    )
    b = (F(0), F(1), F(0), F(1))
    lo, hi = (F(0), F(0)), (F(1), F(1))
    cases = [
        ((F(1, 2), F(1, 2)), (F(0), F(0))),     # interior
        ((F(0), F(1, 2)), (F(-1), F(0))),       # one face, strict
        ((F(0), F(0)), (F(0), F(0))),           # vertex, biactive
        ((F(1), F(1)), (F(2), F(0))),           # vertex, one strict
    ]
    for y, z in cases:
        ub = limiting_normal_cone_gph_box(lo, hi, y, z)
        up = limiting_normal_cone_gph_polyhedron(A, b, y, z)
        assert ub.is_subset_of(up) and up.is_subset_of(ub)


def test_gph_polyhedron_membership_errors():
    A = ((F(-1),),)
    b = (F(0),)
    with pytest.raises(GraphMembershipError):
        limiting_normal_cone_gph_polyhedron(A, b, (F(1),), (F(1),))
    with pytest.raises(GraphMembershipError):
        limiting_normal_cone_gph_polyhedron(A, b, (F(-1),), (F(0),))


def test_gph_polyhedron_simplex_edge_midpoint():
    # z on the edge normal: one active row, interior of the face.
    A = ((F(1), F(1)), (F(-1), F(0)), (F(0), F(-1)))
    b = (F(1), F(0), F(0))
    y = (F(1, 2), F(1, 2))
    z = (F(1, 2), F(1, 2))  # positive multiple of the active row (1, 1)
    union = limiting_normal_cone_gph_polyhedron(A, b, y, z)
    # Every branch cone must contain the tangent/normal split of the face:
    # y-part along the edge normal, z-part along the edge direction.
    assert union.contains((F(1), F(1), F(0), F(0)))[0]
    assert union.contains((F(0), F(0), F(1), F(-1)))[0]
    # A z-direction leaving the critical cone is never allowed.
    assert not union.contains((F(0), F(0), F(1), F(1)))[0]


def test_cone_union_deterministic_iteration():
    union = limiting_normal_cone_gph_box((F(0),), (F(1),), (F(0),), (F(0),))
    assert branch_labels(union) == branch_labels(union)
    assert len(union) == len(union.branches())
