import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilevelcert import ParseError, SmoothFunction, differentiate, evaluate, parse
from bilevelcert.errors import (
    EvaluationDomainError,
    ExactArithmeticError,
    NonFiniteResultError,
)
from bilevelcert.expr import Binary, Const, Pow, Unary, Var, power, to_text


def test_parse_simple_polynomial():
    e = parse("(x1 - 1)^2 + (y1 - 2)^2", 1, 1)
    assert evaluate(e, (1, 2)) == 0
    assert evaluate(e, (0, 0)) == 5


def test_parse_precedence():
    # pow binds tighter than unary minus, which binds tighter than mul.
    assert evaluate(parse("-x1^2", 1, 1), (3, 0)) == -9
    assert evaluate(parse("2*x1 + 3*y1", 1, 1), (5, 7)) == 31
    assert evaluate(parse("2 - 3 - 4", 1, 1), (0, 0)) == -5  # left-assoc
    assert evaluate(parse("2^3", 1, 1), (0, 0)) == 8
    assert evaluate(parse("x1/2/2", 1, 1), (8, 0)) == 2


def test_parse_functions():
    e = parse("sin(x1) + cos(y1) + exp(x1)", 1, 1)
    v = evaluate(e, (0.5, 0.25))
    assert v == pytest.approx(math.sin(0.5) + math.cos(0.25) + math.exp(0.5))


def test_parse_error_offset():
    with pytest.raises(ParseError) as ei:
        parse("x1 +", 1, 1)
    assert ei.value.offset == 4


def test_parse_error_undeclared_variable():
    with pytest.raises(ParseError):
        parse("x2 + y1", 1, 1)
    with pytest.raises(ParseError):
        parse("y3", 2, 2)


def test_parse_error_bad_exponent():
    with pytest.raises(ParseError):
        parse("x1^y1", 1, 1)
    with pytest.raises(ParseError):
        parse("x1^(-2)", 1, 1)


def test_parse_error_trailing_garbage():
    with pytest.raises(ParseError) as ei:
        parse("x1 + 1 )", 1, 1)
    assert ei.value.offset == 7


def test_exact_evaluation_is_rational():
    e = parse("x1^2/3 + 0.1", 1, 1)
    v = evaluate(e, (Fraction(1, 2), 0), exact=True)
    assert v == Fraction(1, 12) + Fraction(1, 10)
    assert isinstance(v, Fraction)


def test_exact_mode_rejects_transcendentals():
    e = parse("sin(x1)", 1, 1)
    with pytest.raises(ExactArithmeticError):
        evaluate(e, (1, 0), exact=True)


def test_division_by_zero():
    e = parse("1/x1", 1, 1)
    with pytest.raises(EvaluationDomainError):
        evaluate(e, (0, 0))
    with pytest.raises(EvaluationDomainError):
        evaluate(e, (0, 0), exact=True)


def test_overflow_is_reported():
    e = parse("exp(x1)", 1, 1)
    with pytest.raises((NonFiniteResultError, EvaluationDomainError)):
        evaluate(e, (1e9, 0))


def test_round_trip_examples():
    for text in [
        "(x1 - 1)^2 + (y1 - 2)^2",
        "(y1 - x1)^2 / 2",
        "-x1^2 + 3*y1",
        "x1 - -5",
        "-5*x1",
        "sin(x1)*cos(y1) + exp(x1*y1)",
        "0.125*x1 + 2.5",
    ]:
        e = parse(text, 1, 1)
        assert parse(to_text(e), 1, 1) == e


# -- random expression trees, printed and reparsed ---------------------------

def _exprs(n=2, m=2, depth=3):
    leaves = st.one_of(
        st.integers(-9, 9).map(lambda k: Const(Fraction(k))),
        st.fractions(
            min_value=-4, max_value=4, max_denominator=8
        ).map(lambda q: Const(Fraction(q.numerator * 5**2, q.denominator * 5**2))
              if q.denominator in (1, 2, 4, 8) else Const(Fraction(q.numerator))),
        st.integers(0, n + m - 1).map(
            lambda i: Var(f"x{i + 1}" if i < n else f"y{i - n + 1}", i)
        ),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from("+-*"), children, children).map(
                lambda t: Binary({"+": "add", "-": "sub", "*": "mul"}[t[0]], t[1], t[2])
            ),
            children.map(lambda c: Unary("neg", c)),
            st.tuples(children, st.integers(0, 3)).map(
                lambda t: power(t[0], t[1])
            ),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@given(_exprs())
@settings(max_examples=150, deadline=None)
def test_round_trip_random_trees(e):
    text = to_text(e)
    again = parse(text, 2, 2)
    pt = (Fraction(1, 3), Fraction(-2), Fraction(1, 2), Fraction(3))
    assert evaluate(e, pt, exact=True) == evaluate(again, pt, exact=True)
    # Printing is a fixed point after one reparse.
    assert to_text(parse(to_text(again), 2, 2)) == to_text(again)


# -- derivative rules vs central finite differences --------------------------

@given(
    _exprs(),
    st.integers(0, 3),
    st.tuples(*[st.integers(-2, 2) for _ in range(4)]),
)
@settings(max_examples=150, deadline=None)
def test_symbolic_derivative_matches_fd(e, index, base):
    point = [b + 0.37 for b in base]
    d = differentiate(e, index)
    sym = evaluate(d, point)
    h = 1e-5 * max(1.0, abs(point[index]))
    hi = list(point)
    lo = list(point)
    hi[index] += h
    lo[index] -= h
    num = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)
    scale = max(1.0, abs(num), abs(sym))
    assert abs(sym - num) <= 5e-5 * scale


def test_derivative_transcendental_rules():
    n, m = 1, 1
    e = parse("sin(x1)*exp(y1)", n, m)
    dx = differentiate(e, 0)
    dy = differentiate(e, 1)
    pt = (0.7, -0.3)
    assert evaluate(dx, pt) == pytest.approx(math.cos(0.7) * math.exp(-0.3))
    assert evaluate(dy, pt) == pytest.approx(math.sin(0.7) * math.exp(-0.3))


def test_derivative_of_constant_and_var():
    assert differentiate(parse("5", 1, 1), 0) == Const(Fraction(0))
    assert evaluate(differentiate(parse("x1", 1, 1), 0), (0, 0)) == 1
    assert evaluate(differentiate(parse("x1", 1, 1), 1), (0, 0)) == 0


def test_smooth_function_vector_and_cache():
    h = SmoothFunction.from_text(["x1 + y1", "x1*y1"], 1, 1)
    assert h.codim == 2
    assert h.value((2, 3)) == [5, 6]
    jac = h.gradient((2, 3))
    assert [[float(v) for v in row] for row in jac] == [[1.0, 1.0], [3.0, 2.0]]
    # partial is cached: same object on repeat.
    assert h.partial(1, 0) is h.partial(1, 0)
