"""Shared builders for the test suite."""

from __future__ import annotations

from fractions import Fraction as F

from novatlas.multiseries import MultiSeries, build, constant, monomial_term, variable
from novatlas.novikov import NovikovScalar, constant as sconst, monomial as tmono, \
    parse_scalar
from novatlas.rationals import INF, GaussianRational


def T(exp, coeff=1, cutoff=INF) -> NovikovScalar:
    return tmono(F(exp), coeff, cutoff)


def S(text, cutoff=INF) -> NovikovScalar:
    return parse_scalar(text, cutoff)


def series(variables, terms, energy=INF, degree=INF) -> MultiSeries:
    """Build a series from {(("x", 1), ("y", -2)): scalar-or-int} maps."""
    from novatlas.multiseries import Monomial
    prepared = {}
    for key, coeff in terms.items():
        mono = Monomial.of(dict(key))
        if not isinstance(coeff, NovikovScalar):
            coeff = sconst(coeff)
        prepared[mono] = coeff
    return build(variables, prepared, energy=energy, degree=degree)


def var(variables, name) -> MultiSeries:
    return variable(frozenset(variables), name)
