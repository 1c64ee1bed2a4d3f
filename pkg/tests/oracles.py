"""Independent oracles: deliberately different algorithms from the package.

Each oracle works one term at a time with exact untruncated arithmetic, or
by brute-force enumeration, so that agreement with the package's truncated
fast paths is a genuine cross-check.
"""

from __future__ import annotations

import itertools
from fractions import Fraction as F

from novatlas.multiseries import MultiSeries
from novatlas.novikov import NovikovScalar, constant, monomial
from novatlas.rationals import INF


def invert_oracle(s: NovikovScalar, window) -> NovikovScalar:
    """Undetermined coefficients: solve s*x = 1 one exponent at a time.

    ``window`` is the energy below which the inverse is required; it should
    be the adjusted window ``cutoff - 2*val(s)`` of the operation under test.
    """
    exact = NovikovScalar(s.terms)  # drop the cutoff, work exactly
    v = exact.val()
    lead = exact.leading()[1]
    x = monomial(-v, lead.inverse())
    while True:
        residual = constant(1) - exact * x
        if residual.is_zero():
            break
        e, c = residual.leading()
        correction_exp = e - v
        if correction_exp >= window:
            break
        x = x + monomial(correction_exp, c * lead.inverse())
    return x.truncate(window)


def digit_lift_oracle(gradient: MultiSeries, variable: str,
                      leading_exp, leading_coeff, target) -> NovikovScalar:
    """One-digit-at-a-time root refinement for a univariate Laurent series.

    Clears denominators to a polynomial first, then repeatedly cancels the
    lowest residual term using only leading coefficients.  Exact arithmetic
    throughout; independent of the quadratically convergent lift.
    """
    min_power = min(mono.exponent(variable) for mono, _ in gradient.terms)
    shift = max(0, -min_power)
    from novatlas.multiseries import monomial_term
    poly = gradient * monomial_term(gradient.variables, {variable: shift}, 1) \
        if shift else gradient
    dpoly = poly.partial_derivative(variable)
    root = monomial(F(leading_exp), leading_coeff)
    target = F(target)
    for _ in range(10_000):
        residual = poly.evaluate({variable: root})
        if residual.is_zero():
            break
        slope = dpoly.evaluate({variable: root})
        e, c = residual.leading()
        j, d = slope.leading()
        correction_exp = e - j
        if correction_exp >= target:
            break
        root = root + monomial(correction_exp, -(c / d))
    else:  # pragma: no cover - oracle guard
        raise AssertionError("digit oracle did not settle")
    return root.truncate(target)


def grid_feasible(constraints, variables, grid_values):
    """Exhaustive search over a rational grid; returns an assignment or None."""
    names = sorted(variables)
    for combo in itertools.product(grid_values, repeat=len(names)):
        assignment = dict(zip(names, combo))
        if all(c.holds_at(assignment) for c in constraints):
            return assignment
    return None
