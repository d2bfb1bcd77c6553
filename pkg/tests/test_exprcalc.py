"""Expression parsing and dual-number evaluation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paulimix import exprcalc
from util import random_expression


def ev(src, t):
    d = exprcalc.eval_dual(exprcalc.parse(src), t)
    return d.value, d.derivative


# ---------------------------------------------------------------------------
# Values and derivatives (hand-verified constants)
# ---------------------------------------------------------------------------


def test_identity_variable():
    assert ev("t", 3.0) == (3.0, 1.0)


def test_exponential_relaxation_at_ln3():
    # 0.75*(1 - e^{-t}) at t = ln 3: value 0.75*(2/3) = 1/2, slope 0.75/3 = 1/4
    value, deriv = ev("0.75*(1-exp(-t))", math.log(3.0))
    assert value == pytest.approx(0.5, abs=1e-15)
    assert deriv == pytest.approx(0.25, abs=1e-15)


def test_frozen_double_rate_point():
    value, deriv = ev("0.5*(1-exp(-2*t))", 0.5)
    assert value == 0.31606027941427883
    assert deriv == 0.36787944117144233


def test_unary_minus_binds_below_power():
    assert ev("-t^2", 3.0) == (-9.0, -6.0)


def test_power_is_right_associative():
    assert ev("2^3^2", 1.0)[0] == 512.0


def test_precedence_mul_over_add():
    assert ev("2*3+4", 0.0)[0] == 10.0
    assert ev("2+3*4", 0.0)[0] == 14.0


def test_division_and_chain():
    value, deriv = ev("t/(1+t)", 1.0)
    assert value == pytest.approx(0.5, abs=1e-15)
    assert deriv == pytest.approx(0.25, abs=1e-15)  # 1/(1+t)^2


def test_trig_derivatives():
    value, deriv = ev("sin(2*t)", 0.3)
    assert value == pytest.approx(math.sin(0.6), abs=1e-15)
    assert deriv == pytest.approx(2.0 * math.cos(0.6), abs=1e-15)
    value, deriv = ev("cos(t)^2", 0.7)
    assert value == pytest.approx(math.cos(0.7) ** 2, abs=1e-15)
    assert deriv == pytest.approx(-2.0 * math.cos(0.7) * math.sin(0.7), abs=1e-14)


def test_log_sqrt_derivatives():
    value, deriv = ev("ln(1+t^2)", 1.5)
    assert value == pytest.approx(math.log(3.25), abs=1e-15)
    assert deriv == pytest.approx(3.0 / 3.25, abs=1e-15)
    value, deriv = ev("sqrt(4+t)", 5.0)
    assert value == pytest.approx(3.0, abs=1e-15)
    assert deriv == pytest.approx(1.0 / 6.0, abs=1e-15)


def test_negative_base_integer_power():
    value, deriv = ev("(-2)^3", 0.0)
    assert value == -8.0
    value, deriv = ev("(t-2)^2", 1.0)  # base negative, constant integer exponent
    assert value == 1.0
    assert deriv == -2.0


def test_variable_exponent_requires_positive_base():
    value, _ = ev("2^t", 3.0)
    assert value == pytest.approx(8.0, rel=1e-15)
    with pytest.raises(exprcalc.DomainError):
        ev("(-2)^t", 3.0)


def test_array_evaluation():
    d = exprcalc.eval_dual(exprcalc.parse("t^2"), np.array([1.0, 2.0, 3.0]))
    assert isinstance(d.value, np.ndarray)
    np.testing.assert_allclose(d.value, [1.0, 4.0, 9.0])
    np.testing.assert_allclose(d.derivative, [2.0, 4.0, 6.0])


def test_scalar_returns_floats():
    d = exprcalc.eval_dual(exprcalc.parse("exp(-t)"), 1.0)
    assert isinstance(d.value, float) and isinstance(d.derivative, float)


# ---------------------------------------------------------------------------
# Domain errors
# ---------------------------------------------------------------------------


def test_pole_reports_time():
    with pytest.raises(exprcalc.DomainError) as exc:
        ev("1/(1-t)", 1.0)
    assert exc.value.t == 1.0


def test_pole_reports_first_bad_time_in_array():
    ast = exprcalc.parse("1/(2-t)")
    with pytest.raises(exprcalc.DomainError) as exc:
        exprcalc.eval_dual(ast, np.array([0.0, 1.0, 2.0, 3.0]))
    assert exc.value.t == 2.0


def test_log_of_nonpositive():
    with pytest.raises(exprcalc.DomainError):
        ev("ln(t-2)", 1.0)


def test_sqrt_derivative_singular_at_zero():
    with pytest.raises(exprcalc.DomainError):
        ev("sqrt(t)", 0.0)


def test_fractional_power_of_negative_base():
    with pytest.raises(exprcalc.DomainError):
        ev("(t-5)^0.5", 1.0)


# ---------------------------------------------------------------------------
# Parse errors are positioned
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "source,position",
    [
        ("2**3", 2),
        ("(1+t", 4),
        ("", 0),
        ("2 + * 3", 4),
        ("foo(t)", 0),
        ("t t", 2),
        ("1..2", 0),
    ],
)
def test_parse_error_positions(source, position):
    with pytest.raises(exprcalc.ParseError) as exc:
        exprcalc.parse(source)
    assert exc.value.position == position


def test_unknown_character_rejected():
    with pytest.raises(exprcalc.ParseError):
        exprcalc.parse("t @ 2")


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------


@given(st.text(alphabet="t0123456789+-*/^(). ", max_size=24))
@settings(max_examples=300, deadline=None)
def test_parser_total_over_junk(source):
    # Every input either parses or raises a positioned ParseError; evaluation
    # of whatever parses either yields finite duals or a stamped DomainError.
    try:
        ast = exprcalc.parse(source)
    except exprcalc.ParseError as exc:
        assert 0 <= exc.position <= len(source)
        return
    try:
        d = exprcalc.eval_dual(ast, 1.25)
    except exprcalc.DomainError as exc:
        assert exc.t == 1.25
        return
    assert math.isfinite(d.value) and math.isfinite(d.derivative)


@given(st.integers(min_value=0, max_value=10_000), st.floats(0.1, 3.0))
@settings(max_examples=200, deadline=None)
def test_dual_derivative_matches_finite_differences(seed, t):
    rng = np.random.default_rng(seed)
    source = random_expression(rng)
    ast = exprcalc.parse(source)
    h = 1e-6
    d = exprcalc.eval_dual(ast, t)
    f_plus = exprcalc.eval_dual(ast, t + h).value
    f_minus = exprcalc.eval_dual(ast, t - h).value
    fd = (f_plus - f_minus) / (2.0 * h)
    assert d.derivative == pytest.approx(fd, rel=1e-5, abs=1e-5 * max(1.0, abs(fd)))


def test_parse_is_pure():
    ast1 = exprcalc.parse("1-exp(-t)")
    ast2 = exprcalc.parse("1-exp(-t)")
    assert ast1 == ast2
