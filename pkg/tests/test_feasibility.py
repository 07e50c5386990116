import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilevelcert.errors import PivotLimitError
from bilevelcert.feasibility import (
    FEASIBLE,
    INFEASIBLE,
    NONZERO,
    ONLY_ZERO,
    LinearSystem,
    cone_nonzero,
    feasible,
    min_norm_on_face,
)

F = Fraction


def test_unconstrained_is_feasible():
    sys = LinearSystem(nvars=2)
    res = feasible(sys)
    assert res.status == FEASIBLE
    assert sys.residual(res.point) == 0


def test_simple_equality():
    sys = LinearSystem(nvars=2, eq_rows=((F(1), F(1)),), eq_rhs=(F(3),))
    res = feasible(sys)
    assert res.status == FEASIBLE
    assert sum(res.point) == 3


def test_infeasible_equalities():
    sys = LinearSystem(
        nvars=1,
        eq_rows=((F(1),), (F(1),)),
        eq_rhs=(F(0), F(1)),
    )
    res = feasible(sys)
    assert res.status == INFEASIBLE
    assert res.infeasibility > 0


def test_nonneg_conflict():
    # x >= 0 and x <= -1 cannot hold together.
    sys = LinearSystem(
        nvars=1,
        ineq_rows=((F(1),),),
        ineq_rhs=(F(-1),),
        nonneg=frozenset({0}),
    )
    assert feasible(sys).status == INFEASIBLE


def test_mixed_system_exact_point():
    # x + y = 1, x - y <= 0, x >= 0: e.g. x = 0, y = 1.
    sys = LinearSystem(
        nvars=2,
        eq_rows=((F(1), F(1)),),
        eq_rhs=(F(1),),
        ineq_rows=((F(1), F(-1)),),
        ineq_rhs=(F(0),),
        nonneg=frozenset({0}),
    )
    res = feasible(sys)
    assert res.status == FEASIBLE
    assert sys.residual(res.point) == 0
    assert all(isinstance(v, Fraction) for v in res.point)


def test_float_mode_returns_floats():
    sys = LinearSystem(nvars=2, eq_rows=((1.5, -0.5),), eq_rhs=(2.25,))
    res = feasible(sys, "float")
    assert res.status == FEASIBLE
    assert abs(sys.residual(res.point)) <= 1e-9


def test_deterministic_repeats():
    sys = LinearSystem(
        nvars=3,
        eq_rows=((F(1), F(2), F(-1)),),
        eq_rhs=(F(4),),
        ineq_rows=((F(0), F(1), F(1)), (F(-1), F(0), F(2))),
        ineq_rhs=(F(5), F(3)),
        nonneg=frozenset({0, 1}),
    )
    pts = [feasible(sys).point for _ in range(5)]
    assert all(p == pts[0] for p in pts)


# Construction oracle: build the system around a known point, so feasibility
# is guaranteed by construction and the solver has no excuse.
@given(st.data())
@settings(max_examples=80, deadline=None)
def test_random_feasible_by_construction(data):
    nv = data.draw(st.integers(1, 4))
    point = [F(data.draw(st.integers(-5, 5)), data.draw(st.integers(1, 3)))
             for _ in range(nv)]
    nonneg = frozenset(i for i in range(nv) if point[i] >= 0 and data.draw(st.booleans()))
    eq_rows, eq_rhs, in_rows, in_rhs = [], [], [], []
    for _ in range(data.draw(st.integers(0, 3))):
        row = tuple(F(data.draw(st.integers(-3, 3))) for _ in range(nv))
        val = sum(a * x for a, x in zip(row, point))
        if data.draw(st.booleans()):
            eq_rows.append(row)
            eq_rhs.append(val)
        else:
            in_rows.append(row)
            in_rhs.append(val + F(data.draw(st.integers(0, 4))))
    sys = LinearSystem(
        nvars=nv,
        eq_rows=tuple(eq_rows), eq_rhs=tuple(eq_rhs),
        ineq_rows=tuple(in_rows), ineq_rhs=tuple(in_rhs),
        nonneg=nonneg,
    )
    res = feasible(sys)
    assert res.status == FEASIBLE
    assert sys.residual(res.point) == 0


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_random_infeasible_certified_by_construction(data):
    # a^T v = 0 and a^T v = c (c != 0) over the same row is always infeasible.
    nv = data.draw(st.integers(1, 3))
    row = tuple(F(data.draw(st.integers(-3, 3))) for _ in range(nv))
    if all(a == 0 for a in row):
        row = (F(1),) + row[1:]
    c = F(data.draw(st.integers(1, 5)))
    sys = LinearSystem(
        nvars=nv, eq_rows=(row, row), eq_rhs=(F(0), c)
    )
    assert feasible(sys).status == INFEASIBLE


def test_min_norm_on_face_improves_norm():
    # x + y = 2 in floats: min-norm solution is (1, 1).
    sys = LinearSystem(nvars=2, eq_rows=((1.0, 1.0),), eq_rhs=(2.0,))
    res = feasible(sys, "float")
    refined = min_norm_on_face(sys, res.point)
    assert refined[0] == pytest.approx(1.0, abs=1e-9)
    assert refined[1] == pytest.approx(1.0, abs=1e-9)


def test_cone_nonzero_detects_ray():
    # Cone {v : v1 = v2} has nonzero members.
    sys = LinearSystem(nvars=2, eq_rows=((F(1), F(-1)),), eq_rhs=(F(0),))
    status, witness, idx = cone_nonzero(sys, probe_indices=range(2))
    assert status == NONZERO
    assert witness[0] == witness[1] != 0


def test_cone_nonzero_only_zero():
    # v1 = 0 and v2 = 0: the cone is trivial.
    sys = LinearSystem(
        nvars=2,
        eq_rows=((F(1), F(0)), (F(0), F(1))),
        eq_rhs=(F(0), F(0)),
    )
    status, witness, idx = cone_nonzero(sys, probe_indices=range(2))
    assert status == ONLY_ZERO
    assert witness is None


def test_cone_nonzero_respects_probe_subset():
    # v2 is free but unprobed; v1 is pinned to zero.
    sys = LinearSystem(nvars=2, eq_rows=((F(1), F(0)),), eq_rhs=(F(0),))
    status, _, _ = cone_nonzero(sys, probe_indices=[0])
    assert status == ONLY_ZERO
    status, witness, _ = cone_nonzero(sys, probe_indices=[1])
    assert status == NONZERO and witness[1] != 0


def test_cone_nonzero_one_sided():
    # v >= 0 with v <= 0: only zero along that axis.
    sys = LinearSystem(
        nvars=1,
        ineq_rows=((F(1),),),
        ineq_rhs=(F(0),),
        nonneg=frozenset({0}),
    )
    status, _, _ = cone_nonzero(sys, probe_indices=[0])
    assert status == ONLY_ZERO


def test_cone_nonzero_negative_ray_found():
    # v <= 0 free variable: the -1 probe must find it.
    sys = LinearSystem(nvars=1, ineq_rows=((F(1),),), ineq_rhs=(F(0),))
    status, witness, _ = cone_nonzero(sys, probe_indices=[0])
    assert status == NONZERO
    assert witness[0] < 0
