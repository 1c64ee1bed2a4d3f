"""Rational-affine constraints on valuations, and exact feasibility.

A constraint reads ``sum_i n_i * val(v_i) + shift  REL  bound`` with integer
coefficients ``n_i`` and rational shift and bound.  A Domain is a finite
conjunction; chart domains and transition overlaps are finite unions of
Domains.  Feasibility is decided exactly by Fourier-Motzkin elimination over
the rationals, with strict inequalities tracked, a witness assignment on
success and a contradictory constraint set on failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .rationals import INF, parse_fraction

RELATIONS = ("=", "<", "<=", ">", ">=")

_NEGATION = {"=": None, "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


@dataclass(frozen=True)
class ValuationConstraint:
    """``sum(n_i * val(v_i)) + shift REL bound``."""

    form: tuple[tuple[str, int], ...]
    relation: str
    bound: Fraction
    shift: Fraction = Fraction(0)
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        seen = set()
        for var, coeff in self.form:
            if var in seen:
                raise ValueError(f"repeated variable {var!r} in constraint form")
            if coeff == 0:
                raise ValueError("zero coefficients are not stored")
            seen.add(var)

    @classmethod
    def of(cls, form: Mapping[str, int], relation: str, bound,
           shift=0, label: str | None = None) -> "ValuationConstraint":
        items = tuple(sorted((v, int(c)) for v, c in form.items() if int(c)))
        return cls(items, relation, parse_fraction(bound), parse_fraction(shift), label)

    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.form)

    def negations(self) -> tuple["ValuationConstraint", ...]:
        """Constraints whose disjunction is the negation of this one."""
        if self.relation == "=":
            return (ValuationConstraint(self.form, "<", self.bound, self.shift),
                    ValuationConstraint(self.form, ">", self.bound, self.shift))
        return (ValuationConstraint(self.form, _NEGATION[self.relation],
                                    self.bound, self.shift),)

    def holds_at(self, valuations: Mapping[str, Fraction | float]) -> bool:
        """Evaluate at a valuation assignment; values may be +inf.

        Raises ValueError when +inf and -inf contributions collide.
        """
        total: Fraction | float = self.shift
        pos_inf = neg_inf = False
        for var, coeff in self.form:
            value = valuations.get(var)
            if value is None:
                raise ValueError(f"no valuation for variable {var!r}")
            if value == INF:
                if coeff > 0:
                    pos_inf = True
                else:
                    neg_inf = True
            else:
                total += coeff * value
        if pos_inf and neg_inf:
            raise ValueError("indeterminate infinity combination in constraint")
        if pos_inf:
            return self.relation in (">", ">=")
        if neg_inf:
            return self.relation in ("<", "<=")
        if self.relation == "=":
            return total == self.bound
        if self.relation == "<":
            return total < self.bound
        if self.relation == "<=":
            return total <= self.bound
        if self.relation == ">":
            return total > self.bound
        return total >= self.bound

    def describe(self) -> str:
        parts = []
        for var, coeff in self.form:
            term = f"val({var})" if abs(coeff) == 1 else f"{abs(coeff)}*val({var})"
            parts.append(("- " if coeff < 0 else "+ " if parts else
                          ("-" if coeff < 0 else "")) + term)
        text = " ".join(parts) if parts else "0"
        if self.shift:
            text += f" + {self.shift}" if self.shift > 0 else f" - {-self.shift}"
        return f"{text} {self.relation} {self.bound}"

    def __str__(self) -> str:
        return self.label or self.describe()


@dataclass(frozen=True)
class Domain:
    """Conjunction of valuation constraints."""

    constraints: tuple[ValuationConstraint, ...]

    @classmethod
    def of(cls, constraints: Iterable[ValuationConstraint]) -> "Domain":
        return cls(tuple(constraints))

    def variables(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.constraints:
            out |= c.variables()
        return frozenset(out)

    def holds_at(self, valuations: Mapping[str, Fraction | float]) -> bool:
        return all(c.holds_at(valuations) for c in self.constraints)


DomainUnion = tuple[Domain, ...]

FULL_DOMAIN: DomainUnion = (Domain(()),)


def union_of(*domains: Domain) -> DomainUnion:
    return tuple(domains)


def point_in_union(domains: Sequence[Domain],
                   valuations: Mapping[str, Fraction | float]) -> bool:
    return any(d.holds_at(valuations) for d in domains)


# ---- feasibility -------------------------------------------------


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: dict[str, Fraction] | None = None
    certificate: tuple[str, ...] | None = None
    branch: int | None = None
    approximate: bool = False


class _Ineq:
    """Internal normal form: sum(coeffs)*x <= rhs, possibly strict."""

    __slots__ = ("coeffs", "strict", "rhs", "origin")

    def __init__(self, coeffs: dict[str, Fraction], strict: bool,
                 rhs: Fraction, origin: frozenset[int]):
        self.coeffs = {v: c for v, c in coeffs.items() if c}
        self.strict = strict
        self.rhs = rhs
        self.origin = origin


def _normalize(constraints: Sequence[ValuationConstraint]) -> list[_Ineq]:
    out: list[_Ineq] = []
    for index, c in enumerate(constraints):
        coeffs = {v: Fraction(n) for v, n in c.form}
        rhs = c.bound - c.shift
        if c.relation in ("<", "<="):
            out.append(_Ineq(coeffs, c.relation == "<", rhs, frozenset({index})))
        elif c.relation in (">", ">="):
            flipped = {v: -n for v, n in coeffs.items()}
            out.append(_Ineq(flipped, c.relation == ">", -rhs, frozenset({index})))
        else:
            out.append(_Ineq(coeffs, False, rhs, frozenset({index})))
            out.append(_Ineq({v: -n for v, n in coeffs.items()}, False, -rhs,
                             frozenset({index})))
    return out


def _eliminate(ineqs: list[_Ineq], var: str) -> list[_Ineq]:
    uppers = [q for q in ineqs if q.coeffs.get(var, 0) > 0]
    lowers = [q for q in ineqs if q.coeffs.get(var, 0) < 0]
    rest = [q for q in ineqs if not q.coeffs.get(var, 0)]
    for up in uppers:
        a = up.coeffs[var]
        for lo in lowers:
            b = -lo.coeffs[var]
            coeffs: dict[str, Fraction] = {}
            for v in set(up.coeffs) | set(lo.coeffs):
                if v == var:
                    continue
                coeffs[v] = b * up.coeffs.get(v, Fraction(0)) + \
                    a * lo.coeffs.get(v, Fraction(0))
            rest.append(_Ineq(coeffs, up.strict or lo.strict,
                              b * up.rhs + a * lo.rhs,
                              up.origin | lo.origin))
    return rest


def _contradiction(ineqs: list[_Ineq]) -> _Ineq | None:
    for q in ineqs:
        if not q.coeffs:
            if q.rhs < 0 or (q.strict and q.rhs == 0):
                return q
    return None


def _witness(constraints: Sequence[ValuationConstraint],
             variables: Sequence[str]) -> dict[str, Fraction]:
    ineqs = _normalize(constraints)
    order = list(variables)
    systems = [ineqs]
    for var in order:
        systems.append(_eliminate(systems[-1], var))
    values: dict[str, Fraction] = {}
    for position in range(len(order) - 1, -1, -1):
        var = order[position]
        lower: tuple[Fraction, bool] | None = None
        upper: tuple[Fraction, bool] | None = None
        for q in systems[position]:
            a = q.coeffs.get(var, Fraction(0))
            if not a:
                continue
            rest = q.rhs - sum(c * values[v] for v, c in q.coeffs.items() if v != var)
            bound = rest / a
            if a > 0:
                if upper is None or bound < upper[0] or \
                        (bound == upper[0] and q.strict):
                    upper = (bound, q.strict)
            else:
                if lower is None or bound > lower[0] or \
                        (bound == lower[0] and q.strict):
                    lower = (bound, q.strict)
        if lower is None and upper is None:
            values[var] = Fraction(0)
        elif lower is None:
            values[var] = upper[0] - 1 if upper[1] else upper[0]
        elif upper is None:
            values[var] = lower[0] + 1 if lower[1] else lower[0]
        else:
            values[var] = (lower[0] + upper[0]) / 2 if lower[0] != upper[0] \
                else lower[0]
    return values


def _labels(constraints: Sequence[ValuationConstraint],
            origin: frozenset[int]) -> tuple[str, ...]:
    return tuple(str(constraints[i]) for i in sorted(origin))


def feasible_conjunction(constraints: Sequence[ValuationConstraint],
                         variables: Iterable[str] = ()) -> FeasibilityResult:
    """Exact feasibility of one conjunction over rational valuations."""
    constraints = list(constraints)
    names = sorted(set(variables) | {v for c in constraints for v in c.variables()})
    ineqs = _normalize(constraints)
    for var in names:
        bad = _contradiction(ineqs)
        if bad is not None:
            return FeasibilityResult(False, certificate=_labels(constraints, bad.origin))
        ineqs = _eliminate(ineqs, var)
    bad = _contradiction(ineqs)
    if bad is not None:
        return FeasibilityResult(False, certificate=_labels(constraints, bad.origin))
    witness = _witness(constraints, names)
    for c in constraints:
        if not c.holds_at(witness):  # pragma: no cover - solver self-check
            raise AssertionError(f"witness fails constraint {c}")
    return FeasibilityResult(True, witness=witness)


def feasible(domains: Sequence[Domain] | Domain,
             extra: Sequence[ValuationConstraint] = (),
             variables: Iterable[str] = ()) -> FeasibilityResult:
    """Feasibility of a union of conjunctions, plus shared extra constraints.

    Returns the first feasible branch's witness, or the certificate of the
    last branch when every branch is infeasible.
    """
    if isinstance(domains, Domain):
        domains = (domains,)
    if not domains:
        domains = FULL_DOMAIN
    last: FeasibilityResult | None = None
    for index, domain in enumerate(domains):
        result = feasible_conjunction(list(domain.constraints) + list(extra), variables)
        if result.feasible:
            return FeasibilityResult(True, witness=result.witness, branch=index)
        last = result
    assert last is not None
    return FeasibilityResult(False, certificate=last.certificate)


def entails(sub: Sequence[Domain], sup: Sequence[Domain]) -> bool:
    """Whether every point of ``sub`` lies in the union ``sup``.

    Decided exactly: the complement of a union is a conjunction of
    disjunctions of negated atoms, expanded by distribution.
    """
    if isinstance(sub, Domain):
        sub = (sub,)
    if isinstance(sup, Domain):
        sup = (sup,)
    for branch in sub:
        choice_sets: list[tuple[ValuationConstraint, ...]] = []
        for sup_branch in sup:
            atoms: list[ValuationConstraint] = []
            for c in sup_branch.constraints:
                atoms.extend(c.negations())
            if not atoms:
                choice_sets = None  # sup branch is the whole space
                break
            choice_sets.append(tuple(atoms))
        if choice_sets is None:
            continue
        stack = [list(branch.constraints)]
        for options in choice_sets:
            stack = [prefix + [atom] for prefix in stack for atom in options]
        for system in stack:
            if feasible_conjunction(system).feasible:
                return False
    return True


# ---- serialization -----------------------------------------------


def constraint_to_json(c: ValuationConstraint) -> dict:
    out: dict = {
        "form": {v: n for v, n in c.form},
        "rel": c.relation,
        "bound": str(c.bound),
    }
    if c.shift:
        out["shift"] = str(c.shift)
    if c.label:
        out["label"] = c.label
    return out


def constraint_from_json(obj: dict) -> ValuationConstraint:
    if not isinstance(obj, dict) or "form" not in obj or "rel" not in obj:
        raise ValueError("constraint object needs 'form' and 'rel'")
    return ValuationConstraint.of(
        {str(v): int(n) for v, n in obj["form"].items()},
        obj["rel"],
        parse_fraction(obj.get("bound", 0)),
        parse_fraction(obj.get("shift", 0)),
        obj.get("label"),
    )


def domains_to_json(domains: Sequence[Domain]) -> object:
    if len(domains) == 1:
        return [constraint_to_json(c) for c in domains[0].constraints]
    return {"union": [[constraint_to_json(c) for c in d.constraints]
                      for d in domains]}


def domains_from_json(obj: object) -> DomainUnion:
    if isinstance(obj, dict) and "union" in obj:
        return tuple(Domain(tuple(constraint_from_json(c) for c in branch))
                     for branch in obj["union"])
    if isinstance(obj, list):
        return (Domain(tuple(constraint_from_json(c) for c in obj)),)
    raise ValueError("domain must be a constraint list or a union object")
