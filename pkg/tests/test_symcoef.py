import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uccmap.errors import AngleOutOfDomain
from uccmap.symcoef import AngleId, ScalarExpr, exp_scalar

T1 = AngleId("t1")
T2 = AngleId("t2")


def test_tan_times_cos_is_sin():
    assert ScalarExpr.tan(T1) * ScalarExpr.cos(T1) == ScalarExpr.sin(T1)


def test_sec_times_cos_is_one():
    assert (ScalarExpr.sec(T1) * ScalarExpr.cos(T1)).is_one()


def test_three_tangent_monomial():
    ta = AngleId("t_ja")
    tb = AngleId("t_jb")
    tc = AngleId("t_ia")
    prod = ScalarExpr.tan(ta) * ScalarExpr.tan(tb) * ScalarExpr.tan(tc)
    assert prod.is_monomial()
    val = prod.eval_numeric({"t_ja": 0.3, "t_jb": 0.2, "t_ia": 0.4})
    assert val == pytest.approx(math.tan(0.3) * math.tan(0.2) * math.tan(0.4), abs=1e-15)


def test_eval_examples():
    assert ScalarExpr.cos(T1).eval_numeric({"t1": 0.0}) == 1.0
    assert ScalarExpr.tan(T1).eval_numeric({"t1": math.pi / 4}) == pytest.approx(1.0, abs=1e-14)
    both = ScalarExpr.cos(T1) * ScalarExpr.cos(T2)
    assert both.eval_numeric({"t1": math.pi / 4, "t2": math.pi / 4}) == pytest.approx(0.5, abs=1e-14)


def test_eval_out_of_domain():
    with pytest.raises(AngleOutOfDomain):
        ScalarExpr.cos(T1).eval_numeric({"t1": 1.6})
    with pytest.raises(AngleOutOfDomain):
        ScalarExpr.sin(T1).eval_numeric({"t1": -math.pi / 2})


def test_equal_sin_over_cos_vs_tan():
    ratio = ScalarExpr.sin(T1) * ScalarExpr.cos(T1, -1)
    assert ratio.equal(ScalarExpr.tan(T1))


def test_one_minus_lncos_differs_from_sec():
    lhs = ScalarExpr.one() - ScalarExpr.lncos(T1)
    rhs = ScalarExpr.sec(T1)
    assert not lhs.equal(rhs)
    # the two agree only to second order in the angle
    assert lhs.eval_numeric({"t1": 0.5}) == pytest.approx(1.1305842, abs=1e-6)
    assert rhs.eval_numeric({"t1": 0.5}) == pytest.approx(1.1394939, abs=1e-6)


def test_zero_sum_equals_empty():
    z = ScalarExpr.sin(T1) - ScalarExpr.sin(T1)
    assert z.is_zero()
    assert z.equal(ScalarExpr.zero())


def test_scaled_angle_atom_is_distinct():
    half = T1.scaled(Fraction(1, 2))
    assert ScalarExpr.sin(half) != ScalarExpr.sin(T1)
    assert ScalarExpr.sin(half).eval_numeric({"t1": 0.8}) == pytest.approx(math.sin(0.4), abs=1e-15)
    assert half.render() == "t1/2"


def test_exp_scalar_of_lncos():
    # exp(-lncos t) = sec t, exp(+2 lncos t) = cos^2 t
    assert exp_scalar(-ScalarExpr.lncos(T1)) == ScalarExpr.sec(T1)
    assert exp_scalar(ScalarExpr.lncos(T1) * 2) == ScalarExpr.cos(T1, 2)
    assert exp_scalar(ScalarExpr.zero()).is_one()
    with pytest.raises(ValueError):
        exp_scalar(ScalarExpr.sin(T1))


def test_render_deterministic():
    e = ScalarExpr.tan(T1) * ScalarExpr.sec(T2)
    assert e.render() == "(+1) sin(t1) cos(t1)^-1 cos(t2)^-1"
    assert ScalarExpr.zero().render() == "(0)"
    assert (-ScalarExpr.rational(3, 2)).render() == "(-3/2)"


# -- ring laws ------------------------------------------------------------

_atoms = st.sampled_from(
    [
        ScalarExpr.one(),
        ScalarExpr.rational(2),
        ScalarExpr.rational(-1, 3),
        ScalarExpr.sin(T1),
        ScalarExpr.cos(T1),
        ScalarExpr.tan(T2),
        ScalarExpr.lncos(T2),
        ScalarExpr.sec(T1),
    ]
)


@st.composite
def _exprs(draw):
    n = draw(st.integers(1, 3))
    expr = ScalarExpr.zero()
    for _ in range(n):
        term = draw(_atoms)
        if draw(st.booleans()):
            term = term * draw(_atoms)
        expr = expr + (term if draw(st.booleans()) else -term)
    return expr


@settings(max_examples=60, deadline=None)
@given(_exprs(), _exprs(), _exprs())
def test_ring_laws(x, y, z):
    assert (x + y) + z == x + (y + z)
    assert x + y == y + x
    assert (x * y) * z == x * (y * z)
    assert x * y == y * x
    assert x * (y + z) == x * y + x * z
    assert (x + ScalarExpr.zero()) == x
    assert x * ScalarExpr.one() == x
    # numeric agreement of distributivity
    labels = {a.label for a in (x * (y + z)).angles()}
    assign = {lab: 0.37 for lab in labels}
    lhs = (x * (y + z)).eval_numeric(assign)
    rhs = (x * y + x * z).eval_numeric(assign)
    assert lhs == pytest.approx(rhs, abs=1e-9, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(_exprs())
def test_double_negation_and_sub(x):
    assert -(-x) == x
    assert (x - x).is_zero()
