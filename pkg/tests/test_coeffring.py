import json
import math

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from twistq.coeffring import ULaurent, exact_div, qbinom


def lau(d):
    out = ULaurent.zero()
    for e, c in d.items():
        out = out + ULaurent.u_pow(e, c)
    return out


small = st.dictionaries(
    st.integers(-6, 6), st.integers(-9, 9), max_size=5
)


@given(small, small, small)
@settings(max_examples=100, deadline=None)
def test_ring_axioms(a, b, c):
    f, g, h = lau(a), lau(b), lau(c)
    assert f + g == g + f
    assert f * g == g * f
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f - f == ULaurent.zero()
    assert f * ULaurent.one() == f


@given(small, small)
@settings(max_examples=100, deadline=None)
def test_exact_div_roundtrip(a, b):
    f, g = lau(a), lau(b)
    if not g.terms:
        return
    assert exact_div(f * g, g) == f


@given(small, st.integers(-5, 5), st.integers(-4, 4))
@settings(max_examples=100, deadline=None)
def test_shift_scale_eval(a, s, c):
    f = lau(a)
    assert f.shift(s).shift(-s) == f
    assert f.scale(c) == f * ULaurent.const(c)
    assert f.shift(s).eval_at_u1() == f.eval_at_u1()
    assert f.negate_exponents().negate_exponents() == f


@given(small)
@settings(max_examples=100, deadline=None)
def test_json_roundtrip(a):
    f = lau(a)
    blob = json.dumps(f.to_json())
    assert ULaurent.from_json(json.loads(blob)) == f
    exps = [e for e, _ in f.to_json()["terms"]]
    assert exps == sorted(exps)


def sympy_qbinom(m, p, v_exp):
    """Independent oracle: the defining product in sympy."""
    x = sp.Symbol("x")
    num = sp.Integer(1)
    den = sp.Integer(1)
    for j in range(1, m + 1):
        num *= 1 - x ** ((p + j) * v_exp)
        den *= 1 - x ** (j * v_exp)
    expr = sp.cancel(sp.together(num / den))
    clear = v_exp * m * (abs(p) + m + 1)  # lift Laurent terms to a polynomial
    poly = sp.Poly(sp.expand(expr * x ** clear), x)
    return {e - clear: int(c) for (e,), c in poly.terms()}


@pytest.mark.parametrize("v_exp", [2, 4, 6])
@pytest.mark.parametrize("p", range(-6, 7))
@pytest.mark.parametrize("m", range(0, 5))
def test_qbinom_matches_product_oracle(m, p, v_exp):
    got = qbinom(m, p, v_exp)
    if 1 <= -p <= m:
        assert got == ULaurent.zero()
        return
    assert dict(got.sorted_terms()) == sympy_qbinom(m, p, v_exp)


@pytest.mark.parametrize("p", range(0, 7))
@pytest.mark.parametrize("m", range(0, 6))
def test_qbinom_counts_at_u1(m, p):
    assert qbinom(m, p, 2).eval_at_u1() == math.comb(m + p, m)


def test_qbinom_pascal():
    # [m+p; m] = [m-1+p; m-1] + v^m [m+p-1; m]
    for m in range(1, 5):
        for p in range(0, 5):
            v = 2
            lhs = qbinom(m, p, v)
            rhs = qbinom(m - 1, p, v) + qbinom(m, p - 1, v).shift(m * v)
            assert lhs == rhs
