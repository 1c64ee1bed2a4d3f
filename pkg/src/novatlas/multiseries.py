"""Multivariate Laurent series with Novikov-scalar coefficients.

Carrier for superpotentials, transition maps and cocycle residues.
Monomial exponents are integers (negative allowed); only the formal energy
variable inside the coefficients carries fractional exponents.

A series holds two truncation levels: the shared energy cutoff of its
coefficients and a total-degree cutoff (sum of absolute exponents, kept
inclusive).  Degree truncation is the dangerous one for evaluation, so a
series remembers in which variables degree truncation actually dropped
terms; evaluating such a direction demands positive valuation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .errors import (
    DivergentEvaluation,
    DivisionByZero,
    InfiniteCutoff,
    NonInvertibleSeries,
    NonInvertibleSubstitution,
    VariableMismatch,
)
from .novikov import NovikovScalar, coerce_scalar
from .rationals import INF, parse_exponent

Degree = Union[int, float]  # float only ever holds INF


@dataclass(frozen=True)
class Monomial:
    """Product of integer variable powers; no zero exponents stored."""

    exponents: tuple[tuple[str, int], ...]

    def __post_init__(self):
        last = None
        for var, exp in self.exponents:
            if last is not None and var <= last:
                raise ValueError("monomial variables must be sorted and unique")
            if exp == 0:
                raise ValueError("zero exponents are not stored")
            last = var

    @classmethod
    def of(cls, mapping: Mapping[str, int] | Iterable[tuple[str, int]] = ()) -> "Monomial":
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        acc: dict[str, int] = {}
        for var, exp in items:
            acc[var] = acc.get(var, 0) + int(exp)
        return cls(tuple(sorted((v, e) for v, e in acc.items() if e)))

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial.of(list(self.exponents) + list(other.exponents))

    def __pow__(self, n: int) -> "Monomial":
        return Monomial(tuple((v, e * n) for v, e in self.exponents)) if n \
            else Monomial(())

    def inverse(self) -> "Monomial":
        return Monomial(tuple((v, -e) for v, e in self.exponents))

    def exponent(self, var: str) -> int:
        for v, e in self.exponents:
            if v == var:
                return e
        return 0

    def without(self, var: str) -> "Monomial":
        return Monomial(tuple((v, e) for v, e in self.exponents if v != var))

    def degree(self) -> int:
        """Total absolute degree: sum of |exponent|."""
        return sum(abs(e) for _, e in self.exponents)

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.exponents)

    def mixed_sign(self) -> bool:
        signs = {e > 0 for _, e in self.exponents}
        return len(signs) > 1

    def __str__(self) -> str:
        if not self.exponents:
            return "1"
        return "*".join(v if e == 1 else f"{v}^{e}" for v, e in self.exponents)


MONOMIAL_ONE = Monomial(())


@dataclass(frozen=True)
class MultiSeries:
    """Finite term map monomial -> scalar over a fixed ambient variable set."""

    variables: frozenset[str]
    terms: tuple[tuple[Monomial, NovikovScalar], ...]
    energy_cutoff: Fraction | float = INF
    degree_cutoff: Degree = INF
    truncated_vars: frozenset[str] = field(default=frozenset(), compare=False)
    unsafe_drops: bool = field(default=False, compare=False)

    def __post_init__(self):
        last = None
        for mono, coeff in self.terms:
            if last is not None and mono.exponents <= last:
                raise ValueError("terms must be sorted by monomial")
            if coeff.is_zero():
                raise ValueError("zero coefficients are not stored")
            if not mono.variables() <= self.variables:
                raise VariableMismatch(
                    f"monomial {mono} outside ambient variables {sorted(self.variables)}")
            if mono.degree() > self.degree_cutoff:
                raise ValueError("monomial above the degree cutoff")
            last = mono.exponents

    # ---- queries -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def occurring(self) -> frozenset[str]:
        out: set[str] = set()
        for mono, _ in self.terms:
            out |= mono.variables()
        return frozenset(out)

    def coefficient(self, mono: Monomial) -> NovikovScalar:
        for m, c in self.terms:
            if m == mono:
                return c
        return NovikovScalar((), self.energy_cutoff)

    def constant_scalar(self) -> NovikovScalar:
        return self.coefficient(MONOMIAL_ONE)

    def val(self) -> Fraction | float:
        return min((c.val() for _, c in self.terms), default=INF)

    def term_map(self) -> dict[Monomial, NovikovScalar]:
        return dict(self.terms)

    # ---- ring operations -----------------------------------------

    def _check_compatible(self, other: "MultiSeries"):
        if self.variables != other.variables:
            raise VariableMismatch(
                f"variable sets differ: {sorted(self.variables)} vs {sorted(other.variables)}")

    def __add__(self, other):
        if not isinstance(other, MultiSeries):
            other = constant(self.variables, other)
        self._check_compatible(other)
        acc = dict(self.terms)
        for mono, coeff in other.terms:
            acc[mono] = acc[mono] + coeff if mono in acc else coeff
        return build(self.variables, acc,
                     energy=min(self.energy_cutoff, other.energy_cutoff),
                     degree=min(self.degree_cutoff, other.degree_cutoff),
                     truncated_vars=self.truncated_vars | other.truncated_vars,
                     unsafe_drops=self.unsafe_drops or other.unsafe_drops)

    __radd__ = __add__

    def __neg__(self):
        return MultiSeries(self.variables,
                           tuple((m, -c) for m, c in self.terms),
                           self.energy_cutoff, self.degree_cutoff,
                           self.truncated_vars, self.unsafe_drops)

    def __sub__(self, other):
        if not isinstance(other, MultiSeries):
            other = constant(self.variables, other)
        return self + (-other)

    def __rsub__(self, other):
        return constant(self.variables, other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, MultiSeries):
            return self.scaled(other)
        self._check_compatible(other)
        acc: dict[Monomial, NovikovScalar] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                m = m1 * m2
                c = c1 * c2
                if m in acc:
                    acc[m] = acc[m] + c
                else:
                    acc[m] = c
        return build(self.variables, acc,
                     energy=min(self.energy_cutoff, other.energy_cutoff),
                     degree=min(self.degree_cutoff, other.degree_cutoff),
                     truncated_vars=self.truncated_vars | other.truncated_vars,
                     unsafe_drops=self.unsafe_drops or other.unsafe_drops)

    __rmul__ = __mul__

    def scaled(self, value) -> "MultiSeries":
        c = coerce_scalar(value)
        acc = {m: k * c for m, k in self.terms}
        return build(self.variables, acc,
                     energy=min(self.energy_cutoff, c.cutoff),
                     degree=self.degree_cutoff,
                     truncated_vars=self.truncated_vars,
                     unsafe_drops=self.unsafe_drops)

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.invert() ** (-exponent)
        result = constant(self.variables, 1,
                          energy=self.energy_cutoff, degree=self.degree_cutoff)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def truncate(self, energy=None, degree=None) -> "MultiSeries":
        return build(self.variables, dict(self.terms),
                     energy=min(self.energy_cutoff,
                                parse_exponent(energy) if energy is not None else INF),
                     degree=min(self.degree_cutoff, degree if degree is not None else INF),
                     truncated_vars=self.truncated_vars,
                     unsafe_drops=self.unsafe_drops)

    def with_variables(self, variables: Iterable[str]) -> "MultiSeries":
        """Reinterpret over a different ambient set (must cover occurring vars)."""
        newvars = frozenset(variables)
        missing = self.occurring() - newvars
        if missing:
            raise VariableMismatch(
                f"variables {sorted(missing)} occur but are absent from the new ambient set")
        return MultiSeries(newvars, self.terms, self.energy_cutoff,
                           self.degree_cutoff, self.truncated_vars & newvars,
                           self.unsafe_drops)

    # ---- inversion -----------------------------------------------

    def invert(self) -> "MultiSeries":
        """Inverse of a single monomial term, or of a series led by an
        invertible constant term whose tail converges under the cutoffs."""
        if not self.terms:
            raise NonInvertibleSeries("zero series is not invertible")
        if len(self.terms) == 1:
            mono, coeff = self.terms[0]
            inv = coeff.invert()
            return build(self.variables, {mono.inverse(): inv},
                         energy=inv.cutoff, degree=self.degree_cutoff,
                         truncated_vars=self.truncated_vars,
                         unsafe_drops=self.unsafe_drops)
        lead = self.constant_scalar()
        if lead.is_zero():
            raise NonInvertibleSeries(
                "series has neither a single term nor an invertible constant term")
        lead_inv = lead.invert()
        unit = self.scaled(lead_inv)
        one = constant(self.variables, 1,
                       energy=unit.energy_cutoff, degree=unit.degree_cutoff)
        tail = one - unit
        bound = self._inversion_bound(tail)
        acc = one
        power = one
        for _ in range(bound):
            power = power * tail
            if power.is_zero():
                break
            acc = acc + power
        else:
            raise NonInvertibleSeries(
                "geometric tail did not terminate under the current cutoffs")
        result = acc.scaled(lead_inv)
        extra = tail.occurring()
        return MultiSeries(result.variables, result.terms, result.energy_cutoff,
                           result.degree_cutoff,
                           result.truncated_vars | extra,
                           result.unsafe_drops)

    def _inversion_bound(self, tail: "MultiSeries") -> int:
        # Split the tail into energy terms (valuation > 0, killed by the
        # energy cutoff) and orthant terms (consistent exponent signs per
        # variable, killed by the degree cutoff).  Anything else can recur
        # at constant energy and degree and is rejected.
        energy_terms = []
        orthant_terms = []
        for mono, coeff in tail.terms:
            if coeff.val() > 0:
                energy_terms.append((mono, coeff))
            elif mono.exponents:
                orthant_terms.append((mono, coeff))
            else:
                raise NonInvertibleSeries("tail has a valuation-zero constant term")
        signs: dict[str, bool] = {}
        for mono, _ in orthant_terms:
            for var, exp in mono.exponents:
                positive = exp > 0
                if signs.setdefault(var, positive) != positive:
                    raise NonInvertibleSeries(
                        f"tail exponents of '{var}' have mixed signs; powers may not grow")
        steps = 0
        if energy_terms:
            if tail.energy_cutoff == INF:
                raise InfiniteCutoff(
                    "inverting this series needs a finite energy cutoff")
            min_val = min(c.val() for _, c in energy_terms)
            steps += int(tail.energy_cutoff / min_val) + 1
        if orthant_terms:
            if tail.degree_cutoff == INF:
                raise NonInvertibleSeries(
                    "inverting this series needs a finite degree cutoff")
            max_energy_degree = max((m.degree() for m, _ in energy_terms), default=0)
            steps = (steps + 1) * (max_energy_degree + 1) + int(tail.degree_cutoff)
        return steps + 4

    # ---- calculus ------------------------------------------------

    def partial_derivative(self, var: str) -> "MultiSeries":
        """Formal term-by-term derivative; Laurent rule for negative powers."""
        acc: dict[Monomial, NovikovScalar] = {}
        for mono, coeff in self.terms:
            e = mono.exponent(var)
            if e == 0:
                continue
            lowered = Monomial.of(dict(mono.exponents) | {var: e - 1})
            c = coeff.scaled(e)
            acc[lowered] = acc[lowered] + c if lowered in acc else c
        return build(self.variables, acc,
                     energy=self.energy_cutoff, degree=self.degree_cutoff,
                     truncated_vars=self.truncated_vars,
                     unsafe_drops=self.unsafe_drops)

    # ---- substitution and evaluation -----------------------------

    def substitute(self, assignment: Mapping[str, "MultiSeries"]) -> "MultiSeries":
        """Formal substitution of series for variables, truncated eagerly.

        Every occurring variable must be assigned, and all assigned series
        must share one target variable set.  Negative powers invert their
        assignment (single monomials invert exactly).
        """
        values = dict(assignment)
        target_vars: frozenset[str] | None = None
        for series in values.values():
            if target_vars is None:
                target_vars = series.variables
            elif series.variables != target_vars:
                raise VariableMismatch("assignment targets disagree on variables")
        missing = self.occurring() - values.keys()
        if missing:
            raise VariableMismatch(f"no assignment for variables {sorted(missing)}")
        if target_vars is None:
            target_vars = frozenset()
        power_cache: dict[tuple[str, int], MultiSeries] = {}

        def power(var: str, exp: int) -> MultiSeries:
            key = (var, exp)
            if key not in power_cache:
                base = values[var]
                if exp < 0:
                    try:
                        base = base.invert()
                    except NonInvertibleSeries as exc:
                        raise NonInvertibleSubstitution(
                            f"variable '{var}' appears with a negative power "
                            f"but its assignment is not invertible: {exc}") from exc
                    power_cache[key] = base ** (-exp)
                else:
                    power_cache[key] = base ** exp
            return power_cache[key]

        extra_trunc = set()
        for v in self.truncated_vars:
            if v in values:
                extra_trunc |= values[v].occurring()
        result = zero(target_vars, energy=self.energy_cutoff)
        if self.unsafe_drops:
            result = MultiSeries(result.variables, result.terms,
                                 result.energy_cutoff, result.degree_cutoff,
                                 result.truncated_vars, True)
        for mono, coeff in self.terms:
            piece = constant(target_vars, coeff)
            for var, exp in mono.exponents:
                piece = piece * power(var, exp)
            result = result + piece
        return MultiSeries(result.variables, result.terms, result.energy_cutoff,
                           result.degree_cutoff,
                           result.truncated_vars | frozenset(extra_trunc),
                           result.unsafe_drops)

    def evaluate(self, point: Mapping[str, NovikovScalar]) -> NovikovScalar:
        """Exact evaluation at a scalar point, modulo the cutoffs.

        Degree-truncated directions demand positive valuation values, and
        negative powers demand nonzero values.
        """
        if self.unsafe_drops:
            raise DivergentEvaluation(
                "series dropped mixed-sign monomials; evaluation cannot be certified")
        for var in sorted(self.truncated_vars):
            value = point.get(var)
            if value is None or not value.val() > 0:
                raise DivergentEvaluation(
                    f"variable '{var}' is an infinite-series direction and needs "
                    f"a value of positive valuation")
        missing = self.occurring() - point.keys()
        if missing:
            raise VariableMismatch(f"no value for variables {sorted(missing)}")
        total = NovikovScalar((), self.energy_cutoff)
        for mono, coeff in self.terms:
            term = coeff
            for var, exp in mono.exponents:
                value = point[var]
                if exp < 0 and value.is_zero():
                    raise DivisionByZero(
                        f"evaluation of {var}^{exp} at zero")
                term = term * value ** exp
            total = total + term
        return total

    # ---- presentation --------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, coeff in self.terms:
            c = str(coeff)
            if mono is MONOMIAL_ONE or not mono.exponents:
                parts.append(f"({c})" if (" " in c or "+" in c[1:]) else c)
            elif c == "1":
                parts.append(str(mono))
            elif c == "-1":
                parts.append(f"-{mono}")
            else:
                parts.append(f"({c})*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


def build(variables: Iterable[str], terms: Mapping[Monomial, NovikovScalar] | Iterable,
          energy=INF, degree: Degree = INF,
          truncated_vars: Iterable[str] = (), unsafe_drops: bool = False) -> MultiSeries:
    """Normalize a term map into a canonical series.

    The energy cutoff becomes the minimum of the requested energy and every
    coefficient's own cutoff; all coefficients are retruncated to it.
    Monomials above the degree cutoff are dropped and recorded.
    """
    variables = frozenset(variables)
    items = terms.items() if isinstance(terms, Mapping) else terms
    staged: dict[Monomial, NovikovScalar] = {}
    for mono, coeff in items:
        if mono in staged:
            staged[mono] = staged[mono] + coeff
        else:
            staged[mono] = coeff
    energy = parse_exponent(energy)
    for coeff in staged.values():
        energy = min(energy, coeff.cutoff)
    dropped: set[str] = set(truncated_vars)
    unsafe = unsafe_drops
    kept: dict[Monomial, NovikovScalar] = {}
    for mono, coeff in staged.items():
        if mono.degree() > degree:
            dropped |= mono.variables()
            unsafe = unsafe or mono.mixed_sign()
            continue
        coeff = coeff.truncate(energy) if energy != INF else coeff
        if not coeff.is_zero():
            kept[mono] = coeff
    ordered = tuple(sorted(kept.items(), key=lambda item: item[0].exponents))
    return MultiSeries(variables, ordered, energy, degree,
                       frozenset(dropped), unsafe)


def zero(variables: Iterable[str], energy=INF, degree: Degree = INF) -> MultiSeries:
    return build(variables, {}, energy=energy, degree=degree)


def constant(variables: Iterable[str], value, energy=INF, degree: Degree = INF) -> MultiSeries:
    c = coerce_scalar(value)
    if c.is_zero():
        return zero(variables, energy=min(energy, c.cutoff), degree=degree)
    return build(variables, {MONOMIAL_ONE: c}, energy=energy, degree=degree)


def variable(variables: Iterable[str], name: str, energy=INF, degree: Degree = INF) -> MultiSeries:
    if name not in frozenset(variables):
        raise VariableMismatch(f"'{name}' is not an ambient variable")
    return build(variables, {Monomial.of({name: 1}): coerce_scalar(1)},
                 energy=energy, degree=degree)


def monomial_term(variables: Iterable[str], exponents: Mapping[str, int], coeff,
                  energy=INF, degree: Degree = INF) -> MultiSeries:
    return build(variables, {Monomial.of(exponents): coerce_scalar(coeff)},
                 energy=energy, degree=degree)


def agree(a: MultiSeries, b: MultiSeries) -> bool:
    """Equality modulo the shared cutoffs (ambient sets must match)."""
    if a.variables != b.variables:
        return False
    energy = min(a.energy_cutoff, b.energy_cutoff)
    degree = min(a.degree_cutoff, b.degree_cutoff)
    return a.truncate(energy, degree).terms == b.truncate(energy, degree).terms


# ---- serialization -----------------------------------------------


def series_to_json(s: MultiSeries) -> list:
    from .novikov import scalar_to_json
    return [
        {"monomial": {v: e for v, e in mono.exponents},
         "coeff": scalar_to_json(coeff)}
        for mono, coeff in s.terms
    ]


def series_from_json(obj: list, variables: Iterable[str],
                     energy=INF, degree: Degree = INF) -> MultiSeries:
    from .novikov import scalar_from_json
    if not isinstance(obj, list):
        raise ValueError("series must be a list of term objects")
    terms: list[tuple[Monomial, NovikovScalar]] = []
    for item in obj:
        mono = Monomial.of({str(v): int(e) for v, e in item.get("monomial", {}).items()})
        terms.append((mono, scalar_from_json(item["coeff"])))
    return build(variables, terms, energy=energy, degree=degree)
