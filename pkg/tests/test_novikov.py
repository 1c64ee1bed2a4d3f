"""Scalar arithmetic: worked examples, then randomized properties."""

from __future__ import annotations

from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from novatlas.errors import CutoffUnderflow, InfiniteCutoff, ZeroNotInvertible
from novatlas.novikov import (
    NovikovScalar,
    RingClass,
    agree,
    classify,
    constant,
    monomial,
    parse_scalar,
    scalar,
    scalar_from_json,
    scalar_to_json,
)
from novatlas.rationals import INF, GaussianRational

from oracles import invert_oracle
from support import S, T


class TestValuation:
    def test_zero_scalar(self):
        assert scalar(()).val() == INF

    def test_smallest_exponent(self):
        assert S("T^{1/2}+3T^2").val() == F(1, 2)

    def test_constant_leading_term(self):
        assert S("2+T").val() == 0


class TestRingOps:
    def test_difference_of_squares(self):
        assert S("1+T") * S("1-T") == S("1-T^2")

    def test_exponent_addition(self):
        assert S("T^{1/2}") * S("T^{1/2}") == S("T")

    def test_valuation_additivity(self):
        assert (S("2T") * S("3T^{1/3}")).val() == F(4, 3)

    def test_subtraction_and_zero(self):
        a = S("1+2T")
        assert (a - a).is_zero()

    def test_cutoff_minimum(self):
        a = S("1", cutoff=2)
        b = S("1", cutoff=3)
        assert (a + b).cutoff == 2
        assert (a * b).cutoff == 2

    def test_pow(self):
        assert S("1+T") ** 3 == S("1+3T+3T^2+T^3")
        assert T(2) ** -2 == T(-4)


class TestInvert:
    def test_geometric_series(self):
        assert S("1-T", cutoff=3).invert() == S("1+T+T^2", cutoff=3)

    def test_monomial_inverse_exact(self):
        inv = T(1).invert()
        assert inv == T(-1)
        assert inv.cutoff == INF

    def test_undetermined_coefficients_example(self):
        got = S("2+T^{1/2}", cutoff=F(3, 2)).invert()
        assert got == scalar([(0, F(1, 2)), (F(1, 2), F(-1, 4)), (1, F(1, 8))],
                             F(3, 2))

    def test_matches_oracle(self):
        s = S("2+T^{1/2}", cutoff=F(3, 2))
        assert s.invert() == invert_oracle(s, F(3, 2))

    def test_oracle_on_laurent_unit(self):
        s = S("T^{-1}+1+T", cutoff=3)
        window = 3 - 2 * s.val()
        assert s.invert() == invert_oracle(s, window)

    def test_zero_not_invertible(self):
        with pytest.raises(ZeroNotInvertible):
            scalar(()).invert()

    def test_infinite_cutoff_rejected_for_series(self):
        with pytest.raises(InfiniteCutoff):
            S("1+T").invert()

    def test_window_underflow(self):
        with pytest.raises(CutoffUnderflow):
            S("T^2+T^3", cutoff=3).invert()

    def test_adjusted_window(self):
        s = S("T+T^2", cutoff=5)
        inv = s.invert()
        assert inv.cutoff == 3
        assert (s * inv - constant(1)).is_zero()


class TestTruncate:
    def test_drops_high_terms(self):
        assert S("1+T+T^2").truncate(2) == S("1+T", cutoff=2)

    def test_zero(self):
        assert scalar(()).truncate(3) == scalar((), 3)

    def test_negative_exponents_survive(self):
        assert S("T^{-1}+T").truncate(F(1, 2)) == S("T^{-1}", cutoff=F(1, 2))

    def test_rejects_nonpositive_energy(self):
        with pytest.raises(CutoffUnderflow):
            S("1").truncate(0)


class TestClassify:
    def test_zero_valuation_unit(self):
        got = classify(S("2+T^{1/2}"))
        assert got == frozenset({RingClass.LAMBDA, RingClass.LAMBDA0,
                                 RingClass.LAMBDA0_UNITS, RingClass.LAMBDA_UNITS})

    def test_positive_valuation(self):
        got = classify(T(F(3, 4)))
        assert got == frozenset({RingClass.LAMBDA, RingClass.LAMBDA0,
                                 RingClass.LAMBDA_PLUS, RingClass.LAMBDA_UNITS})

    def test_negative_valuation(self):
        assert classify(T(-1)) == frozenset({RingClass.LAMBDA,
                                             RingClass.LAMBDA_UNITS})

    def test_zero(self):
        got = classify(scalar(()))
        assert RingClass.LAMBDA_UNITS not in got
        assert RingClass.LAMBDA0 in got and RingClass.LAMBDA_PLUS in got


class TestSerialization:
    def test_documented_shape(self):
        obj = scalar_to_json(S("2-T^{1/2}", cutoff=3))
        assert obj == {"terms": [{"exp": "0", "re": "2", "im": "0"},
                                 {"exp": "1/2", "re": "-1", "im": "0"}],
                       "cutoff": "3"}

    def test_roundtrip(self):
        s = scalar([(F(-1, 3), GaussianRational.of(F(1, 2), 2)), (2, 5)], F(7, 2))
        assert scalar_from_json(scalar_to_json(s)) == s

    def test_infinite_cutoff_marker(self):
        assert scalar_to_json(S("1"))["cutoff"] == "inf"

    def test_no_floats_accepted(self):
        with pytest.raises(ValueError):
            scalar_from_json({"terms": [{"exp": "0.5", "re": "1", "im": "0"}],
                              "cutoff": "inf"})


class TestLiteralParser:
    @pytest.mark.parametrize("text,expected", [
        ("0", scalar(())),
        ("T", T(1)),
        ("-T^{3/2}", T(F(3, 2), -1)),
        ("2T^-1", T(-1, 2)),
        ("1/2-1/4T^{1/2}", scalar([(0, F(1, 2)), (F(1, 2), F(-1, 4))])),
        ("(1+2i)T^2", scalar([(2, GaussianRational.of(1, 2))])),
        ("i", scalar([(0, GaussianRational.of(0, 1))])),
        ("3*T^(1/3)", T(F(1, 3), 3)),
    ])
    def test_examples(self, text, expected):
        assert parse_scalar(text) == expected

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_scalar("T^^2")


# ---- randomized properties -------------------------------------------

coefficients = st.builds(
    GaussianRational.of,
    st.fractions(min_value=-3, max_value=3, max_denominator=4),
    st.fractions(min_value=-2, max_value=2, max_denominator=3),
)

exponents = st.fractions(min_value=-2, max_value=4, max_denominator=6)


def _scalars(min_val=None):
    exps = exponents if min_val is None else \
        st.fractions(min_value=min_val, max_value=4, max_denominator=6)
    return st.builds(
        lambda terms, cutoff: scalar(terms, cutoff),
        st.lists(st.tuples(exps, coefficients), max_size=4),
        st.sampled_from([INF, F(3), F(4), F(5)]),
    )


@given(_scalars(), _scalars())
def test_valuation_additivity_random(a, b):
    product = a * b
    if a.is_zero() or b.is_zero():
        assert product.is_zero()
    elif a.val() + b.val() < product.cutoff:
        assert product.val() == a.val() + b.val()


@given(_scalars(), _scalars())
def test_ultrametric_random(a, b):
    total = a + b
    assert total.val() >= min(a.val(), b.val())
    if a.val() != b.val() and min(a.val(), b.val()) < total.cutoff:
        assert total.val() == min(a.val(), b.val())


@given(_scalars(min_val=0), _scalars(min_val=0), _scalars(min_val=0))
def test_ring_axioms_modulo_cutoff(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c


@given(_scalars())
def test_truncated_product_window(a):
    # truncate(E)(a*b) over pre-truncated inputs at the widened window
    b = a + constant(1)
    E = F(2)
    widened = E - min(0, a.val() if not a.is_zero() else 0) \
        - min(0, b.val() if not b.is_zero() else 0)
    full = (a * b).truncate(E)
    pre = (a.truncate(widened) * b.truncate(widened)).truncate(E)
    assert full == pre


@given(_scalars())
@settings(max_examples=200)
def test_invert_involution(s):
    if s.is_zero():
        return
    finite = s.truncate(4) if s.cutoff == INF else s
    if finite.is_zero():
        return
    try:
        inv = finite.invert()
        back = inv.invert()
    except CutoffUnderflow:
        return
    assert agree(back, finite)


@given(_scalars())
def test_classify_consistent_with_val(s):
    got = classify(s)
    assert (RingClass.LAMBDA0 in got) == (s.val() >= 0)
    assert (RingClass.LAMBDA_PLUS in got) == (s.val() > 0)
    assert (RingClass.LAMBDA0_UNITS in got) == (s.val() == 0)
    assert (RingClass.LAMBDA_UNITS in got) == (not s.is_zero())
