"""Critical loci of chart potentials over the Novikov field.

Univariate Laurent potentials go through Newton-polygon leading solutions
followed by quadratically convergent lifting with exact scalar linear
algebra.  Pure monomial potentials return coordinate-subspace components.
Anything else needs explicit leading seeds, or errors loudly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .atlas import Chart
from .constraints import Domain, ValuationConstraint, feasible, point_in_union
from .errors import (
    CutoffUnderflow,
    LiftDidNotConverge,
    NoRoots,
    SingularJacobian,
    UnsupportedPotential,
)
from .multiseries import MultiSeries, Monomial
from .novikov import NovikovScalar, monomial as t_power, scalar_to_json
from .rationals import INF, GaussianRational, format_exponent

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeadingTerm:
    """Leading solution ``coeff * T^exponent``; exponent INF encodes zero."""

    exponent: Fraction | float
    coeff: GaussianRational


@dataclass(frozen=True)
class SymbolicBranch:
    """A polygon slope whose leading equation has no Gaussian-rational root.

    ``poly`` holds the leading equation's coefficients, ascending.
    """

    exponent: Fraction
    poly: tuple[GaussianRational, ...]


@dataclass(frozen=True)
class CriticalPoint:
    coordinates: tuple[tuple[str, NovikovScalar], ...]
    value: NovikovScalar
    energy: Fraction | float

    def point(self) -> dict[str, NovikovScalar]:
        return dict(self.coordinates)


@dataclass(frozen=True)
class CriticalComponent:
    """Coordinate subspace: some variables pinned to zero, the rest free."""

    pinned: tuple[str, ...]
    free: tuple[str, ...]


@dataclass(frozen=True)
class LiftResult:
    coordinates: dict[str, NovikovScalar]
    iterations: int


@dataclass(frozen=True)
class CritConfig:
    energy: Fraction | None = None
    seeds: tuple[Mapping[str, NovikovScalar], ...] = ()


@dataclass(frozen=True)
class CriticalLocusReport:
    points: tuple[CriticalPoint, ...]
    components: tuple[CriticalComponent, ...]
    excluded_points: tuple[CriticalPoint, ...] = ()
    excluded_components: tuple[CriticalComponent, ...] = ()
    symbolic: tuple[SymbolicBranch, ...] = ()
    degenerate: tuple[LeadingTerm, ...] = ()


# ---- Newton polygon ------------------------------------------------


def _univariate_points(series: MultiSeries, var: str) -> dict[int, NovikovScalar]:
    points: dict[int, NovikovScalar] = {}
    for mono, coeff in series.terms:
        if not mono.variables() <= {var}:
            raise UnsupportedPotential(
                f"series is not univariate in {var!r} (found {mono})")
        points[mono.exponent(var)] = coeff
    return points


def newton_slopes(series: MultiSeries, var: str) -> tuple[list[tuple[Fraction, tuple[GaussianRational, ...]]], int]:
    """Polygon slopes with their leading equations, plus the multiplicity of
    the zero root.

    Each slope ``mu`` comes with the ascending coefficient list of the
    leading equation in the leading coefficient ``c`` of ``c*T^mu``.
    """
    points = _univariate_points(series, var)
    if not points:
        raise NoRoots("the zero series has no distinguished roots")
    data = {n: (coeff.val(), coeff.leading()[1]) for n, coeff in points.items()}
    n_min = min(data)
    zero_mult = n_min if n_min > 0 else 0
    slopes: list[tuple[Fraction, tuple[GaussianRational, ...]]] = []
    candidates = set()
    items = sorted(data.items())
    for i, (n1, (a1, _)) in enumerate(items):
        for n2, (a2, _) in items[i + 1:]:
            candidates.add(Fraction(a1 - a2, n2 - n1))
    for mu in sorted(candidates):
        level = min(a + n * mu for n, (a, _) in items)
        support = [n for n, (a, _) in items if a + n * mu == level]
        if len(support) < 2:
            continue
        base = min(support)
        width = max(support) - base
        coeffs = [GaussianRational.of(0)] * (width + 1)
        for n in support:
            coeffs[n - base] = data[n][1]
        slopes.append((mu, tuple(coeffs)))
    return slopes, zero_mult


def gaussian_poly_roots(coeffs: Sequence[GaussianRational]) -> tuple[list[GaussianRational], bool]:
    """Roots of a polynomial over Q(i) that lie in Q(i).

    Degrees one and two are solved exactly.  Higher degrees fall back to
    float root isolation followed by exact rational reconstruction and
    verification; unverified roots are simply not returned, and the second
    component reports whether every root was captured.
    """
    coeffs = list(coeffs)
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    if len(coeffs) <= 1:
        return [], True
    degree = len(coeffs) - 1
    if degree == 1:
        return [-coeffs[0] / coeffs[1]], True
    if degree == 2:
        a, b, c = coeffs[2], coeffs[1], coeffs[0]
        disc = b * b - 4 * a * c
        root = disc.sqrt()
        if root is None:
            return [], False
        if not root:
            return [-b / (2 * a)], True
        sols = [(-b + root) / (2 * a), (-b - root) / (2 * a)]
        sols.sort(key=lambda z: z.sort_key())
        return sols, True

    import numpy

    numeric = [complex(float(c.real), float(c.imag)) for c in coeffs[::-1]]
    found: list[GaussianRational] = []
    complete = True
    seen: set[GaussianRational] = set()
    for z in numpy.roots(numeric):
        candidate = GaussianRational(
            Fraction(float(z.real)).limit_denominator(10 ** 6),
            Fraction(float(z.imag)).limit_denominator(10 ** 6))
        value = GaussianRational.of(0)
        for c in coeffs[::-1]:
            value = value * candidate + c
        if not value and candidate not in seen:
            seen.add(candidate)
            found.append(candidate)
        elif value:
            complete = False
    found.sort(key=lambda z: z.sort_key())
    return found, complete


def newton_leading(series: MultiSeries, var: str) -> list[LeadingTerm]:
    """All leading solutions ``c*T^mu`` of ``series = 0`` over Q(i).

    Raises NoRoots when the polygon has no slopes and zero is not a root.
    """
    slopes, zero_mult = newton_slopes(series, var)
    out: list[LeadingTerm] = []
    if zero_mult > 0:
        out.append(LeadingTerm(INF, GaussianRational.of(0)))
    for mu, poly in slopes:
        roots, _ = gaussian_poly_roots(poly)
        out.extend(LeadingTerm(mu, r) for r in roots if r)
    if not out and not slopes:
        raise NoRoots("Newton polygon is a single vertex")
    return out


# ---- lifting --------------------------------------------------------


def _solve_linear(matrix: list[list[NovikovScalar]],
                  rhs: list[NovikovScalar]) -> list[NovikovScalar]:
    """Exact Gaussian elimination over Novikov scalars, pivoting on the
    entry of smallest valuation."""
    n = len(matrix)
    m = [row[:] for row in matrix]
    b = rhs[:]
    perm = list(range(n))
    for col in range(n):
        pivot_row = None
        pivot_val = INF
        for row in range(col, n):
            entry = m[row][col]
            if not entry.is_zero() and entry.val() < pivot_val:
                pivot_val = entry.val()
                pivot_row = row
        if pivot_row is None:
            raise SingularJacobian("linearized system is singular")
        m[col], m[pivot_row] = m[pivot_row], m[col]
        b[col], b[pivot_row] = b[pivot_row], b[col]
        inv = m[col][col].invert()
        for row in range(col + 1, n):
            factor = m[row][col] * inv
            if factor.is_zero():
                continue
            for k in range(col, n):
                m[row][k] = m[row][k] - factor * m[col][k]
            b[row] = b[row] - factor * b[col]
    out: list[NovikovScalar] = [NovikovScalar(())] * n
    for row in range(n - 1, -1, -1):
        acc = b[row]
        for k in range(row + 1, n):
            acc = acc - m[row][k] * out[k]
        out[row] = acc * m[row][row].invert()
    del perm
    return out


def _certified_at_least(s: NovikovScalar, energy) -> bool:
    return s.val() >= energy and s.cutoff >= energy


def hensel_lift(system: Sequence[MultiSeries], variables: Sequence[str],
                start: Mapping[str, NovikovScalar], target_energy,
                max_iterations: int = 64) -> LiftResult:
    """Refine a leading solution until every residual is certified at or
    above the target energy.

    The leading-order Jacobian must be invertible; degenerate starts raise
    SingularJacobian.  Working precision is padded and retried when cutoff
    shifts eat the certification window.
    """
    if len(system) != len(variables):
        raise ValueError("system and variable counts differ")
    target = Fraction(target_energy)
    jacobian = [[eq.partial_derivative(v) for v in variables] for eq in system]
    last_error: Exception | None = None
    for pad in (1, 2, 4, 8, 16):
        working = target + pad
        coords = {v: start[v].truncate(working) for v in variables}
        iterations = 0
        progress: Fraction | float | None = None
        stalled = 0
        try:
            while iterations <= max_iterations:
                residuals = [eq.evaluate(coords) for eq in system]
                if all(_certified_at_least(r, target) for r in residuals):
                    log.debug("lift converged in %d iterations (pad %s)",
                              iterations, pad)
                    return LiftResult(coords, iterations)
                current = min(r.val() for r in residuals)
                if progress is not None and current <= progress:
                    stalled += 1
                    if stalled >= 2:
                        raise LiftDidNotConverge(
                            f"residual valuation stalled at {current}")
                else:
                    stalled = 0
                progress = current
                matrix = [[entry.evaluate(coords) for entry in row]
                          for row in jacobian]
                if iterations == 0:
                    for row in matrix:
                        if all(entry.is_zero() for entry in row):
                            raise SingularJacobian(
                                "Jacobian row vanishes at the leading solution")
                delta = _solve_linear(matrix, [-r for r in residuals])
                coords = {v: (coords[v] + d).truncate(working)
                          for v, d in zip(variables, delta)}
                iterations += 1
            raise LiftDidNotConverge(
                f"no certified residual after {max_iterations} iterations")
        except SingularJacobian:
            raise
        except LiftDidNotConverge as exc:
            last_error = exc
        except CutoffUnderflow as exc:  # pragma: no cover - defensive
            last_error = exc
    raise LiftDidNotConverge(str(last_error))


# ---- critical locus --------------------------------------------------


def _component_in_domain(component: CriticalComponent, chart: Chart) -> bool:
    pinned = set(component.pinned)
    for branch in chart.domain:
        remaining: list[ValuationConstraint] = []
        violated = False
        for c in branch.constraints:
            touched = {v for v, _ in c.form} & pinned
            if not touched:
                remaining.append(c)
                continue
            vals = {v: INF for v in touched}
            free_part = {v: n for v, n in c.form if v not in pinned}
            if free_part:
                # Mixed constraint: infinite contribution decides unless the
                # finite part can still matter; with one sign of infinity the
                # relation is decided outright.
                signs = {n > 0 for v, n in c.form if v in pinned}
                if len(signs) > 1:
                    violated = True
                    break
                positive = signs.pop()
                holds = c.relation in ((">", ">=") if positive else ("<", "<="))
                if not holds:
                    violated = True
                    break
            else:
                try:
                    if not c.holds_at(vals):
                        violated = True
                        break
                except ValueError:
                    violated = True
                    break
        if violated:
            continue
        if feasible((Domain(tuple(remaining)),)).feasible:
            return True
    return False


def _monomial_components(chart: Chart, mono: Monomial) -> tuple[list[CriticalComponent], list[CriticalComponent]]:
    exps = dict(mono.exponents)
    posvars = sorted(v for v, e in exps.items() if e > 0)
    candidates: list[tuple[str, ...]] = []
    for v in posvars:
        if exps[v] >= 2:
            candidates.append((v,))
    for i, v in enumerate(posvars):
        for w in posvars[i + 1:]:
            candidates.append((v, w))
    kept: list[tuple[str, ...]] = []
    for cand in sorted(candidates, key=lambda c: (len(c), c)):
        if any(set(prev) <= set(cand) for prev in kept):
            continue
        if _kills_gradient(exps, set(cand)):
            kept.append(cand)
    components = []
    for cand in kept:
        free = tuple(v for v in chart.variables if v not in cand)
        components.append(CriticalComponent(tuple(cand), free))
    inside = [c for c in components if _component_in_domain(c, chart)]
    outside = [c for c in components if not _component_in_domain(c, chart)]
    return inside, outside


def _kills_gradient(exps: dict[str, int], pinned: set[str]) -> bool:
    for var, e in exps.items():
        others = pinned - {var}
        own = var in pinned and e >= 2
        if not others and not own:
            return False
    return True


def _point_in_domain(chart: Chart, vals: Mapping[str, Fraction | float]) -> bool:
    try:
        return point_in_union(chart.domain, vals)
    except ValueError:
        return False


def critical_locus(chart: Chart, config: CritConfig | None = None) -> CriticalLocusReport:
    """Critical points and components of a chart potential, filtered by the
    chart domain.

    Supported shapes: constants, pure monomials, univariate Laurent
    potentials on single-variable charts, and multivariate potentials with
    explicitly configured leading seeds.
    """
    config = config or CritConfig()
    potential = chart.potential
    target = config.energy
    if target is None:
        if potential.energy_cutoff == INF:
            raise UnsupportedPotential(
                "no target energy: the potential is exact and the config "
                "sets none")
        target = potential.energy_cutoff
    occurring = sorted(potential.occurring())
    if not occurring:
        component = CriticalComponent((), tuple(chart.variables))
        return CriticalLocusReport((), (component,))
    if len(potential.terms) == 1:
        inside, outside = _monomial_components(chart, potential.terms[0][0])
        return CriticalLocusReport((), tuple(inside),
                                   excluded_components=tuple(outside))
    if len(occurring) == 1 and len(chart.variables) == 1:
        return _univariate_locus(chart, occurring[0], target)
    if config.seeds:
        return _seeded_locus(chart, config.seeds, target)
    raise UnsupportedPotential(
        "potential is neither constant, monomial, nor univariate on a "
        "single-variable chart; supply leading seeds to lift")


def _univariate_locus(chart: Chart, var: str, target) -> CriticalLocusReport:
    potential = chart.potential
    gradient = potential.partial_derivative(var)
    if gradient.is_zero():
        component = CriticalComponent((), tuple(chart.variables))
        return CriticalLocusReport((), (component,))
    slopes, zero_mult = newton_slopes(gradient, var)
    points: list[CriticalPoint] = []
    excluded: list[CriticalPoint] = []
    symbolic: list[SymbolicBranch] = []
    degenerate: list[LeadingTerm] = []
    if zero_mult > 0:
        zero_scalar = NovikovScalar((), Fraction(target))
        value = potential.evaluate({var: zero_scalar})
        point = CriticalPoint(((var, zero_scalar),), value, Fraction(target))
        if _point_in_domain(chart, {var: INF}):
            points.append(point)
        else:
            excluded.append(point)
    for mu, poly in slopes:
        roots, complete = gaussian_poly_roots(poly)
        if not complete:
            symbolic.append(SymbolicBranch(mu, poly))
        for root in roots:
            if not root:
                continue
            lead = LeadingTerm(mu, root)
            start = {var: t_power(mu, root)}
            try:
                lifted = hensel_lift([gradient], [var], start, target)
            except SingularJacobian:
                degenerate.append(lead)
                continue
            coords = lifted.coordinates
            value = potential.evaluate(coords)
            point = CriticalPoint(tuple(sorted(coords.items())), value,
                                  Fraction(target))
            vals = {var: coords[var].val()}
            (points if _point_in_domain(chart, vals) else excluded).append(point)
    points.sort(key=_point_key)
    excluded.sort(key=_point_key)
    return CriticalLocusReport(tuple(points), (), excluded_points=tuple(excluded),
                               symbolic=tuple(symbolic),
                               degenerate=tuple(degenerate))


def _point_key(point: CriticalPoint):
    out = []
    for var, scalar in point.coordinates:
        key = [(float(e), c.sort_key()) for e, c in scalar.terms]
        out.append((var, key))
    return out


def _seeded_locus(chart: Chart, seeds, target) -> CriticalLocusReport:
    potential = chart.potential
    variables = [v for v in chart.variables if v in potential.occurring()]
    system = [potential.partial_derivative(v) for v in variables]
    points: list[CriticalPoint] = []
    excluded: list[CriticalPoint] = []
    degenerate: list[LeadingTerm] = []
    for seed in seeds:
        try:
            lifted = hensel_lift(system, variables, seed, target)
        except SingularJacobian:
            for var in variables:
                s = seed[var]
                if s.terms:
                    exp, coeff = s.leading()
                    degenerate.append(LeadingTerm(exp, coeff))
            continue
        coords = dict(lifted.coordinates)
        for v in chart.variables:
            coords.setdefault(v, NovikovScalar((), Fraction(target)))
        value = potential.evaluate(coords)
        point = CriticalPoint(tuple(sorted(coords.items())), value, Fraction(target))
        vals = {v: coords[v].val() for v in chart.variables}
        (points if _point_in_domain(chart, vals) else excluded).append(point)
    points.sort(key=_point_key)
    return CriticalLocusReport(tuple(points), (), excluded_points=tuple(excluded),
                               degenerate=tuple(degenerate))


# ---- serialization ---------------------------------------------------


def point_to_json(point: CriticalPoint) -> dict:
    return {
        "coordinates": {var: scalar_to_json(s) for var, s in point.coordinates},
        "value": scalar_to_json(point.value),
        "energy": format_exponent(point.energy),
    }


def component_to_json(component: CriticalComponent) -> dict:
    return {"pinned": list(component.pinned), "free": list(component.free)}


def report_to_json(report: CriticalLocusReport) -> dict:
    return {
        "points": [point_to_json(p) for p in report.points],
        "components": [component_to_json(c) for c in report.components],
        "excluded_points": [point_to_json(p) for p in report.excluded_points],
        "excluded_components": [component_to_json(c)
                                for c in report.excluded_components],
        "symbolic": [
            {"exponent": str(s.exponent),
             "poly": [str(c) for c in s.poly]}
            for s in report.symbolic
        ],
        "degenerate": [
            {"exponent": format_exponent(d.exponent), "coeff": str(d.coeff)}
            for d in report.degenerate
        ],
    }
