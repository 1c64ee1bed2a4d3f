"""Exact rational and Gaussian-rational coefficient arithmetic.

Rational numbers are plain ``fractions.Fraction`` values (canonical reduced
form with positive denominator is guaranteed by the stdlib).  ``INF`` is the
marker used for infinite valuations and for "no truncation"; it is a float
only so that it orders correctly against ``Fraction``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

INF = math.inf

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def parse_fraction(value: object) -> Fraction:
    """Parse an exact rational from ``"p/q"`` / ``"n"`` strings or numbers.

    Floats are rejected: the toolkit never touches inexact input.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not _RATIONAL_RE.match(text):
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise ValueError(f"not an exact rational: {value!r}")


def format_fraction(value: Fraction) -> str:
    return str(value)


def parse_exponent(value: object) -> Fraction | float:
    """Like :func:`parse_fraction` but accepting the ``"inf"`` marker."""
    if value == INF:
        return INF
    if isinstance(value, str) and value.strip() in ("inf", "+inf"):
        return INF
    return parse_fraction(value)


def format_exponent(value: Fraction | float) -> str:
    return "inf" if value == INF else str(value)


def frac_sqrt(value: Fraction) -> Fraction | None:
    """Exact nonnegative square root of a rational, or None."""
    if value < 0:
        return None
    num = math.isqrt(value.numerator)
    den = math.isqrt(value.denominator)
    if num * num == value.numerator and den * den == value.denominator:
        return Fraction(num, den)
    return None


def _coerce(value) -> "GaussianRational":
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (int, Fraction)):
        return GaussianRational(Fraction(value), Fraction(0))
    raise TypeError(f"cannot coerce {type(value).__name__} to GaussianRational")


@dataclass(frozen=True)
class GaussianRational:
    """An element of Q(i): exact real and imaginary rational parts."""

    real: Fraction
    imag: Fraction

    @classmethod
    def of(cls, real, imag=0) -> "GaussianRational":
        return cls(Fraction(real), Fraction(imag))

    def __bool__(self) -> bool:
        return bool(self.real) or bool(self.imag)

    def is_zero(self) -> bool:
        return not self

    def __add__(self, other):
        other = _coerce(other)
        return GaussianRational(self.real + other.real, self.imag + other.imag)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.real, -self.imag)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        return GaussianRational(
            self.real * other.real - self.imag * other.imag,
            self.real * other.imag + self.imag * other.real,
        )

    __rmul__ = __mul__

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.real, -self.imag)

    def norm(self) -> Fraction:
        return self.real * self.real + self.imag * self.imag

    def inverse(self) -> "GaussianRational":
        n = self.norm()
        if not n:
            raise ZeroDivisionError("inverse of zero")
        return GaussianRational(self.real / n, -self.imag / n)

    def __truediv__(self, other):
        return self * _coerce(other).inverse()

    def __rtruediv__(self, other):
        return _coerce(other) * self.inverse()

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = GaussianRational.of(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def sqrt(self) -> "GaussianRational | None":
        """Exact square root in Q(i) when one exists, else None.

        The returned root is canonical: positive real part, or zero real
        part with nonnegative imaginary part.
        """
        if not self:
            return GaussianRational.of(0)
        a, b = self.real, self.imag
        if b == 0:
            r = frac_sqrt(a)
            if r is not None:
                return GaussianRational(r, Fraction(0))
            r = frac_sqrt(-a)
            if r is not None:
                return GaussianRational(Fraction(0), r)
            return None
        n = frac_sqrt(self.norm())
        if n is None:
            return None
        p = frac_sqrt((a + n) / 2)
        if p is None or p == 0:
            return None
        q = b / (2 * p)
        root = GaussianRational(p, q)
        return root if root * root == self else None

    def sort_key(self):
        return (self.real, self.imag)

    def __str__(self) -> str:
        if not self:
            return "0"
        parts = []
        if self.real:
            parts.append(str(self.real))
        if self.imag:
            if self.imag == 1:
                im = "i"
            elif self.imag == -1:
                im = "-i"
            else:
                im = f"{self.imag}i"
            if parts and not im.startswith("-"):
                parts.append(f"+{im}")
            else:
                parts.append(im)
        return "".join(parts)


GAUSS_ZERO = GaussianRational.of(0)
GAUSS_ONE = GaussianRational.of(1)
GAUSS_I = GaussianRational.of(0, 1)

_GAUSS_RE = re.compile(
    r"^(?P<real>[+-]?\d+(?:/\d+)?)?"
    r"(?:(?P<imag>[+-]?(?:\d+(?:/\d+)?)?)i)?$"
)


def parse_gaussian(text: str) -> GaussianRational:
    """Parse ``"a"``, ``"bi"``, ``"a+bi"``, ``"i"`` style literals."""
    s = text.strip().replace(" ", "")
    m = _GAUSS_RE.match(s)
    if not m or (m.group("real") is None and m.group("imag") is None) or not s:
        raise ValueError(f"not a Gaussian rational literal: {text!r}")
    real = Fraction(m.group("real")) if m.group("real") else Fraction(0)
    imag_text = m.group("imag")
    if imag_text is None:
        imag = Fraction(0)
    elif imag_text in ("", "+"):
        imag = Fraction(1)
    elif imag_text == "-":
        imag = Fraction(-1)
    else:
        imag = Fraction(imag_text)
    return GaussianRational(real, imag)
