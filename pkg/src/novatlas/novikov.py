"""Truncated exact arithmetic over the Novikov ring and field.

A scalar is a finite sum ``a_0*T^{A_0} + a_1*T^{A_1} + ...`` with strictly
increasing rational exponents and Gaussian-rational coefficients, carried
together with a truncation energy: terms with exponent at or above the
``cutoff`` are unknown.  A cutoff of ``INF`` marks an exact value.

The valuation of a scalar is its smallest exponent, ``+inf`` for zero.
Binary operations truncate the result at the smaller of the two cutoffs.
Inversion shifts the reliable window: inverting a scalar of valuation ``v``
known below energy ``E`` yields a scalar known below ``E - 2v``.

>>> a = parse_scalar("1-T", cutoff=3)
>>> str(a.invert())
'1 + T + T^2 + O(T^3)'
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Union

from .errors import CutoffUnderflow, InfiniteCutoff, ZeroNotInvertible
from .rationals import (
    INF,
    GaussianRational,
    format_exponent,
    parse_exponent,
    parse_fraction,
    parse_gaussian,
)

Exponent = Union[Fraction, float]  # float only ever holds INF
CoeffLike = Union[int, Fraction, GaussianRational]


def _coeff(value: CoeffLike) -> GaussianRational:
    if isinstance(value, GaussianRational):
        return value
    return GaussianRational.of(value)


@dataclass(frozen=True)
class NovikovScalar:
    """Canonical term list plus truncation energy.

    ``terms`` is sorted by strictly increasing exponent, holds no zero
    coefficients, and every exponent lies below ``cutoff``.
    """

    terms: tuple[tuple[Fraction, GaussianRational], ...]
    cutoff: Exponent = INF

    def __post_init__(self):
        if self.cutoff != INF and self.cutoff <= 0:
            raise CutoffUnderflow(f"cutoff must be positive, got {self.cutoff}")
        last = None
        for exp, coeff in self.terms:
            if last is not None and exp <= last:
                raise ValueError("exponents must be strictly increasing")
            if not coeff:
                raise ValueError("zero coefficients are not stored")
            if exp >= self.cutoff:
                raise ValueError("term at or above the cutoff")
            last = exp

    # ---- queries -------------------------------------------------

    def val(self) -> Exponent:
        """Smallest exponent of a nonzero term; +inf for the zero scalar."""
        return self.terms[0][0] if self.terms else INF

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def leading(self) -> tuple[Fraction, GaussianRational]:
        if not self.terms:
            raise ValueError("zero scalar has no leading term")
        return self.terms[0]

    def coefficient(self, exp) -> GaussianRational:
        exp = parse_fraction(exp)
        for e, c in self.terms:
            if e == exp:
                return c
        return GaussianRational.of(0)

    # ---- ring operations -----------------------------------------

    def __add__(self, other):
        other = coerce_scalar(other)
        return scalar(self.terms + other.terms,
                      min(self.cutoff, other.cutoff))

    __radd__ = __add__

    def __neg__(self):
        return NovikovScalar(tuple((e, -c) for e, c in self.terms), self.cutoff)

    def __sub__(self, other):
        return self + (-coerce_scalar(other))

    def __rsub__(self, other):
        return coerce_scalar(other) + (-self)

    def __mul__(self, other):
        other = coerce_scalar(other)
        cutoff = min(self.cutoff, other.cutoff)
        acc: dict[Fraction, GaussianRational] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                if e >= cutoff:
                    break  # other.terms sorted, later products only larger
                acc[e] = acc.get(e, GaussianRational.of(0)) + c1 * c2
        return scalar(acc.items(), cutoff)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.invert() ** (-exponent)
        result = coerce_scalar(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def scaled(self, coeff: CoeffLike):
        c = _coeff(coeff)
        if not c:
            return NovikovScalar((), self.cutoff)
        return NovikovScalar(tuple((e, k * c) for e, k in self.terms), self.cutoff)

    def shift(self, delta) -> "NovikovScalar":
        """Multiply by T^delta exactly (exponents and cutoff shift together)."""
        delta = parse_fraction(delta)
        cutoff = INF if self.cutoff == INF else self.cutoff + delta
        return NovikovScalar(tuple((e + delta, c) for e, c in self.terms), cutoff)

    def truncate(self, energy) -> "NovikovScalar":
        """Drop terms with exponent >= energy; cutoff becomes min(old, energy)."""
        energy = parse_exponent(energy)
        return scalar(self.terms, min(self.cutoff, energy))

    def invert(self) -> "NovikovScalar":
        """Multiplicative inverse, reliable below ``cutoff - 2*val``.

        A single-term scalar inverts exactly at any cutoff.  A multi-term
        scalar needs a finite cutoff for the geometric-series tail.
        """
        if not self.terms:
            raise ZeroNotInvertible("zero scalar is not invertible")
        v = self.val()
        new_cutoff = INF if self.cutoff == INF else self.cutoff - 2 * v
        if new_cutoff != INF and new_cutoff <= 0:
            raise CutoffUnderflow(
                f"inverting valuation {v} at cutoff {self.cutoff} leaves no window")
        lead_exp, lead_coeff = self.terms[0]
        if len(self.terms) == 1:
            return NovikovScalar(((-lead_exp, lead_coeff.inverse()),), new_cutoff)
        if self.cutoff == INF:
            raise InfiniteCutoff(
                "inverting a multi-term scalar needs a finite cutoff")
        window = self.cutoff - v
        unit = scalar(((e - v, c / lead_coeff) for e, c in self.terms), window)
        one = scalar(((Fraction(0), GaussianRational.of(1)),), window)
        tail = one - unit  # valuation > 0, so powers terminate below window
        acc = one
        power = one
        while True:
            power = power * tail
            if power.is_zero():
                break
            acc = acc + power
        return acc.scaled(lead_coeff.inverse()).shift(-v)

    # ---- presentation --------------------------------------------

    def __str__(self) -> str:
        parts = []
        for exp, coeff in self.terms:
            c = str(coeff)
            needs_parens = ("+" in c[1:]) or ("-" in c[1:])
            if exp == 0:
                parts.append(f"({c})" if needs_parens else c)
                continue
            e = f"T^{exp}" if exp.denominator == 1 and exp >= 0 else f"T^({exp})"
            if exp == 1:
                e = "T"
            if coeff == GaussianRational.of(1):
                parts.append(e)
            elif coeff == GaussianRational.of(-1):
                parts.append(f"-{e}")
            else:
                parts.append(f"({c})*{e}" if needs_parens else f"{c}*{e}")
        text = " + ".join(parts).replace("+ -", "- ") if parts else ""
        if self.cutoff != INF:
            tail = f"O(T^{self.cutoff})" if Fraction(self.cutoff).denominator == 1 \
                else f"O(T^({self.cutoff}))"
            text = f"{text} + {tail}" if text else tail
        return text or "0"


def scalar(terms: Iterable[tuple], cutoff: Exponent = INF) -> NovikovScalar:
    """Build a scalar from (exponent, coefficient) pairs, normalizing."""
    cutoff = parse_exponent(cutoff)
    acc: dict[Fraction, GaussianRational] = {}
    for exp, coeff in terms:
        exp = parse_fraction(exp)
        coeff = _coeff(coeff)
        acc[exp] = acc.get(exp, GaussianRational.of(0)) + coeff
    kept = sorted((e, c) for e, c in acc.items() if c and e < cutoff)
    return NovikovScalar(tuple(kept), cutoff)


def coerce_scalar(value, cutoff: Exponent = INF) -> NovikovScalar:
    if isinstance(value, NovikovScalar):
        return value
    return scalar(((Fraction(0), _coeff(value)),), cutoff)


def monomial(exp, coeff: CoeffLike = 1, cutoff: Exponent = INF) -> NovikovScalar:
    """The scalar ``coeff * T^exp``."""
    return scalar(((parse_fraction(exp), coeff),), cutoff)


def constant(coeff: CoeffLike, cutoff: Exponent = INF) -> NovikovScalar:
    return scalar(((Fraction(0), coeff),), cutoff)


ZERO = NovikovScalar(())
ONE = constant(1)


def agree(a: NovikovScalar, b: NovikovScalar) -> bool:
    """Equality modulo the smaller of the two cutoffs."""
    cutoff = min(a.cutoff, b.cutoff)
    if cutoff == INF:
        return a.terms == b.terms
    return a.truncate(cutoff).terms == b.truncate(cutoff).terms


# ---- ring membership ---------------------------------------------


class RingClass(Enum):
    """Membership classes within the Novikov field."""

    LAMBDA = "Lambda"
    LAMBDA0 = "Lambda0"
    LAMBDA_PLUS = "LambdaPlus"
    LAMBDA0_UNITS = "Lambda0Units"
    LAMBDA_UNITS = "LambdaUnits"


def classify(s: NovikovScalar) -> frozenset[RingClass]:
    """Every ring class the scalar belongs to.

    Membership follows the valuation: ``Lambda0`` needs val >= 0,
    ``LambdaPlus`` val > 0, ``Lambda0Units`` val == 0, and any nonzero
    scalar is a unit of the field.
    """
    v = s.val()
    out = {RingClass.LAMBDA}
    if v >= 0:
        out.add(RingClass.LAMBDA0)
    if v > 0:
        out.add(RingClass.LAMBDA_PLUS)
    if v == 0:
        out.add(RingClass.LAMBDA0_UNITS)
    if not s.is_zero():
        out.add(RingClass.LAMBDA_UNITS)
    return frozenset(out)


# ---- serialization -----------------------------------------------


def scalar_to_json(s: NovikovScalar) -> dict:
    """Exact string rationals only, no floats."""
    return {
        "terms": [
            {"exp": str(e), "re": str(c.real), "im": str(c.imag)}
            for e, c in s.terms
        ],
        "cutoff": format_exponent(s.cutoff),
    }


def scalar_from_json(obj: dict) -> NovikovScalar:
    if not isinstance(obj, dict) or "terms" not in obj:
        raise ValueError("scalar object must have a 'terms' list")
    terms = []
    for item in obj["terms"]:
        exp = parse_fraction(item["exp"])
        coeff = GaussianRational(parse_fraction(item.get("re", 0)),
                                 parse_fraction(item.get("im", 0)))
        terms.append((exp, coeff))
    return scalar(terms, parse_exponent(obj.get("cutoff", "inf")))


# ---- literal parser ----------------------------------------------


def parse_scalar(text: str, cutoff: Exponent = INF) -> NovikovScalar:
    """Parse literals like ``"2 - 1/4*T^{1/2} + (1+2i)T^2"``.

    Terms are rationals, optionally followed by ``T`` with an optional
    rational exponent (braces, parentheses or bare).  Gaussian coefficients
    with both parts need parentheses.
    """
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty scalar literal")
    terms: list[tuple[Fraction, GaussianRational]] = []
    pos = 0
    first = True
    while pos < len(s):
        sign = 1
        if s[pos] in "+-":
            sign = -1 if s[pos] == "-" else 1
            pos += 1
        elif not first:
            raise ValueError(f"expected '+' or '-' at {pos} in {text!r}")
        coeff, pos = _parse_coefficient(s, pos, text)
        exp = Fraction(0)
        if pos < len(s) and s[pos] == "T":
            pos += 1
            exp = Fraction(1)
            if pos < len(s) and s[pos] == "^":
                exp, pos = _parse_exponent_literal(s, pos + 1, text)
        elif coeff is None:
            raise ValueError(f"expected a term at {pos} in {text!r}")
        if coeff is None:
            coeff = GaussianRational.of(1)
        terms.append((exp, coeff * sign))
        first = False
    return scalar(terms, cutoff)


def _parse_coefficient(s: str, pos: int, full: str):
    if pos < len(s) and s[pos] == "(":
        depth = s.find(")", pos)
        if depth < 0:
            raise ValueError(f"unbalanced parenthesis in {full!r}")
        coeff = parse_gaussian(s[pos + 1:depth])
        pos = depth + 1
    else:
        import re as _re
        m = _re.match(r"\d+(?:/\d+)?i?|i", s[pos:])
        if not m:
            return None, pos
        token = m.group(0)
        pos += len(token)
        coeff = parse_gaussian(token)
    if pos < len(s) and s[pos] == "*":
        pos += 1
    return coeff, pos


def _parse_exponent_literal(s: str, pos: int, full: str):
    close = None
    if pos < len(s) and s[pos] in "{(":
        close = "}" if s[pos] == "{" else ")"
        pos += 1
    import re as _re
    m = _re.match(r"[+-]?\d+(?:/\d+)?", s[pos:])
    if not m:
        raise ValueError(f"expected an exponent at {pos} in {full!r}")
    exp = Fraction(m.group(0))
    pos += len(m.group(0))
    if close is not None:
        if pos >= len(s) or s[pos] != close:
            raise ValueError(f"unbalanced exponent bracket in {full!r}")
        pos += 1
    return exp, pos
