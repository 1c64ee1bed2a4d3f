"""Charts, transitions and the gluing validators.

A chart is a named coordinate patch: variables, a valuation-constrained
domain (finite union of conjunctions) and a potential.  A transition maps
every target variable to a series in the source variables, over a declared
overlap region.  The validators check that transitions preserve potentials,
that declared loops compose to the identity, that points transport
consistently, and that overlap regions are feasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import multiseries
from .constraints import (
    Domain,
    DomainUnion,
    FeasibilityResult,
    FULL_DOMAIN,
    ValuationConstraint,
    constraint_to_json,
    domains_from_json,
    domains_to_json,
    feasible,
    point_in_union,
)
from .errors import (
    ChartMismatch,
    DivisionByZero,
    OutsideOverlap,
    ParseError,
    UnknownChart,
    UnknownTransition,
    VariableMismatch,
)
from .multiseries import MultiSeries, Monomial, series_from_json, series_to_json
from .novikov import NovikovScalar
from .rationals import INF


@dataclass(frozen=True)
class Chart:
    """A coordinate patch with a valuation domain and a potential."""

    name: str
    variables: tuple[str, ...]
    domain: DomainUnion
    potential: MultiSeries

    def __post_init__(self):
        varset = frozenset(self.variables)
        if len(self.variables) != len(varset):
            raise ValueError(f"chart {self.name!r} repeats a variable")
        if not self.potential.occurring() <= varset:
            raise VariableMismatch(
                f"potential of chart {self.name!r} uses variables outside the chart")
        for branch in self.domain:
            if not branch.variables() <= varset:
                raise VariableMismatch(
                    f"domain of chart {self.name!r} constrains unknown variables")
        if not feasible(self.domain).feasible:
            raise ValueError(f"domain of chart {self.name!r} is infeasible")

    def varset(self) -> frozenset[str]:
        return frozenset(self.variables)

    def coordinate(self, name: str) -> MultiSeries:
        return multiseries.variable(self.varset(), name)


@dataclass(frozen=True)
class Transition:
    """A gluing map: every target variable as a series in source variables."""

    id: str
    source: Chart
    target: Chart
    tmap: tuple[tuple[str, MultiSeries], ...]
    overlap: DomainUnion = FULL_DOMAIN
    inverse_tmap: tuple[tuple[str, MultiSeries], ...] | None = None
    inverse_overlap: DomainUnion | None = None
    overlap_exact: bool = field(default=True, compare=False)

    def __post_init__(self):
        mapped = {v for v, _ in self.tmap}
        if mapped != set(self.target.variables):
            raise VariableMismatch(
                f"transition {self.id!r} must map every target variable "
                f"({sorted(set(self.target.variables) ^ mapped)} mismatched)")
        srcvars = self.source.varset()
        for var, series in self.tmap:
            if not series.occurring() <= srcvars:
                raise VariableMismatch(
                    f"transition {self.id!r}: map of {var!r} uses non-source variables")
        for branch in self.overlap:
            if not branch.variables() <= srcvars:
                raise VariableMismatch(
                    f"transition {self.id!r}: overlap constrains unknown variables")
        if self.inverse_tmap is not None:
            tgtvars = self.target.varset()
            if {v for v, _ in self.inverse_tmap} != set(self.source.variables):
                raise VariableMismatch(
                    f"transition {self.id!r}: inverse must map every source variable")
            for var, series in self.inverse_tmap:
                if not series.occurring() <= tgtvars:
                    raise VariableMismatch(
                        f"transition {self.id!r}: inverse map of {var!r} uses "
                        f"non-target variables")

    def map(self) -> dict[str, MultiSeries]:
        return dict(self.tmap)

    def assignment(self) -> dict[str, MultiSeries]:
        """Target variables as series in source variables, for substitution."""
        return dict(self.tmap)

    def has_inverse(self) -> bool:
        return self.inverse_tmap is not None

    def reversed(self) -> "Transition":
        if self.inverse_tmap is None:
            raise UnknownTransition(
                f"transition {self.id!r} declares no inverse")
        return Transition(
            id=f"~{self.id}",
            source=self.target,
            target=self.source,
            tmap=self.inverse_tmap,
            overlap=self.inverse_overlap or self.target.domain,
            inverse_tmap=self.tmap,
            inverse_overlap=self.overlap,
        )

    @classmethod
    def identity(cls, chart: Chart, id: str = "identity") -> "Transition":
        coords = tuple((v, chart.coordinate(v)) for v in chart.variables)
        return cls(id=id, source=chart, target=chart, tmap=coords,
                   overlap=chart.domain, inverse_tmap=coords,
                   inverse_overlap=chart.domain)


# ---- reports ------------------------------------------------------


@dataclass(frozen=True)
class PotentialMatchReport:
    transition: str
    ok: bool
    residual: MultiSeries


class CocycleStatus(Enum):
    IDENTITY = "identity"
    FAILED = "failed"
    EMPTY_OVERLAP = "empty-overlap"


@dataclass(frozen=True)
class CocycleReport:
    loop: tuple[str, ...]
    status: CocycleStatus
    residuals: tuple[tuple[str, MultiSeries], ...]
    overlap: FeasibilityResult
    approximate: bool

    @property
    def ok(self) -> bool:
        return self.status is not CocycleStatus.FAILED


@dataclass(frozen=True)
class TransportReport:
    transition: str
    coordinates: tuple[tuple[str, NovikovScalar], ...]
    source_regime: str
    target_regime: str

    def point(self) -> dict[str, NovikovScalar]:
        return dict(self.coordinates)


# ---- validators ----------------------------------------------------


def check_potential_match(transition: Transition,
                          energy=None, degree=None) -> PotentialMatchReport:
    """Residual of ``W_source - W_target(map)``; ok when it vanishes."""
    w_src = transition.source.potential
    w_dst = transition.target.potential
    if energy is not None or degree is not None:
        w_src = w_src.truncate(energy, degree)
        w_dst = w_dst.truncate(energy, degree)
    pulled = w_dst.substitute(transition.assignment())
    residual = w_src - pulled.with_variables(w_src.variables)
    return PotentialMatchReport(transition.id, residual.is_zero(), residual)


def _pullback_constraints(constraints: Iterable[ValuationConstraint],
                          tmap: Mapping[str, MultiSeries]) -> tuple[list[ValuationConstraint], bool]:
    """Rewrite constraints on target variables in terms of source valuations.

    Exact only when every referenced map entry is a single monomial with a
    nonzero scalar, where ``val`` is additive.  Non-monomial entries make
    the pullback approximate: those constraints are dropped and flagged.
    """
    out: list[ValuationConstraint] = []
    exact = True
    for c in constraints:
        coeffs: dict[str, int] = {}
        shift = c.shift
        ok = True
        for var, n in c.form:
            series = tmap[var]
            if len(series.terms) != 1:
                ok = False
                break
            mono, scalarc = series.terms[0]
            shift += n * scalarc.val()
            for v, e in mono.exponents:
                coeffs[v] = coeffs.get(v, 0) + n * e
        if not ok:
            exact = False
            continue
        out.append(ValuationConstraint.of(coeffs, c.relation, c.bound, shift,
                                          label=c.label))
    return out, exact


def compose(t1: Transition, t2: Transition) -> Transition:
    """Composite transition: apply ``t1`` first, then ``t2``."""
    if t1.target.name != t2.source.name:
        raise ChartMismatch(
            f"cannot compose {t1.id!r} ({t1.target.name}) with "
            f"{t2.id!r} (expects {t2.source.name})")
    assignment = t1.assignment()
    new_map = tuple((var, series.substitute(assignment))
                    for var, series in t2.tmap)
    exact = t1.overlap_exact and t2.overlap_exact
    branches: list[Domain] = []
    for b1 in t1.overlap:
        for b2 in t2.overlap:
            pulled, pb_exact = _pullback_constraints(b2.constraints, assignment)
            exact = exact and pb_exact
            branches.append(Domain(tuple(b1.constraints) + tuple(pulled)))
    inverse_map = None
    if t1.inverse_tmap is not None and t2.inverse_tmap is not None:
        back = dict(t2.inverse_tmap)
        inverse_map = tuple((var, series.substitute(back))
                            for var, series in t1.inverse_tmap)
    return Transition(
        id=f"{t1.id}*{t2.id}",
        source=t1.source,
        target=t2.target,
        tmap=new_map,
        overlap=tuple(branches),
        inverse_tmap=inverse_map,
        inverse_overlap=t2.inverse_overlap if inverse_map is not None else None,
        overlap_exact=exact,
    )


def compose_chain(transitions: Sequence[Transition]) -> Transition:
    if not transitions:
        raise ValueError("empty transition chain")
    acc = transitions[0]
    for t in transitions[1:]:
        acc = compose(acc, t)
    return acc


def verify_cocycle(loop: Sequence[Transition],
                   energy=None, degree=None) -> CocycleReport:
    """Compose a closed loop and compare against the identity map.

    An infeasible common overlap is reported as EMPTY_OVERLAP, which is
    distinct from a residual failure.
    """
    composite = compose_chain(list(loop))
    if composite.source.name != composite.target.name:
        raise ChartMismatch("loop does not close up")
    residuals = []
    ok = True
    for var, series in composite.tmap:
        if energy is not None or degree is not None:
            series = series.truncate(energy, degree)
        residual = series - composite.source.coordinate(var).truncate(
            series.energy_cutoff, series.degree_cutoff)
        residuals.append((var, residual))
        ok = ok and residual.is_zero()
    overlap_result = feasible(composite.overlap)
    if not overlap_result.feasible:
        status = CocycleStatus.EMPTY_OVERLAP
    elif ok:
        status = CocycleStatus.IDENTITY
    else:
        status = CocycleStatus.FAILED
    return CocycleReport(tuple(t.id for t in loop), status, tuple(residuals),
                         overlap_result, not composite.overlap_exact)


def _regime(chart: Chart, valuations: Mapping[str, Fraction | float]) -> str:
    try:
        inside = point_in_union(chart.domain, valuations)
    except ValueError:
        return "pseudo"
    return "honest" if inside else "pseudo"


def transport_point(point: Mapping[str, NovikovScalar],
                    transition: Transition) -> TransportReport:
    """Push a scalar point through a transition.

    The point must satisfy the overlap constraints; evaluation failures
    (zero divisions, uncertified directions) surface as OutsideOverlap.
    """
    missing = set(transition.source.variables) - set(point)
    if missing:
        raise OutsideOverlap(f"point misses coordinates {sorted(missing)}")
    vals = {v: point[v].val() for v in transition.source.variables}
    if transition.overlap:
        satisfied = False
        first_violation: ValuationConstraint | None = None
        for branch in transition.overlap:
            violated = None
            for c in branch.constraints:
                try:
                    holds = c.holds_at(vals)
                except ValueError:
                    holds = False
                if not holds:
                    violated = c
                    break
            if violated is None:
                satisfied = True
                break
            if first_violation is None:
                first_violation = violated
        if not satisfied and first_violation is not None:
            raise OutsideOverlap(
                f"point violates overlap constraint: {first_violation.describe()}",
                constraint=first_violation)
    out = []
    for var, series in transition.tmap:
        try:
            out.append((var, series.evaluate(point)))
        except (DivisionByZero, ZeroDivisionError) as exc:
            raise OutsideOverlap(
                f"map of {var!r} is undefined at the point: {exc}") from exc
    target_vals = {v: s.val() for v, s in out}
    return TransportReport(transition.id, tuple(out),
                           _regime(transition.source, vals),
                           _regime(transition.target, target_vals))


def transition_valuation_relations(transition: Transition) -> tuple[list[ValuationConstraint], bool]:
    """Affine valuation relations induced by the map on a combined
    source-plus-target variable space.

    Single-monomial entries give exact equalities
    ``val(target) = val(scalar) + sum(e * val(source))``.  Other entries are
    skipped and flag the result as approximate.  Target variables that
    collide with source names are prefixed with the target chart name.
    """
    srcvars = set(transition.source.variables)
    relations: list[ValuationConstraint] = []
    exact = True
    for var, series in transition.tmap:
        tname = var if var not in srcvars else f"{transition.target.name}.{var}"
        if len(series.terms) != 1:
            exact = False
            continue
        mono, scalarc = series.terms[0]
        form = {tname: 1}
        for v, e in mono.exponents:
            form[v] = form.get(v, 0) - e
        relations.append(ValuationConstraint.of(
            form, "=", scalarc.val(), 0,
            label=f"{transition.id}: val({var}) relation"))
    return relations, exact


def overlap_feasibility(transition: Transition,
                        include_domains: bool = True) -> FeasibilityResult:
    """Feasibility of the gluing region: overlap plus induced valuation
    relations, optionally intersected with both chart domains."""
    relations, exact = transition_valuation_relations(transition)
    srcvars = set(transition.source.variables)

    def rename(domains: DomainUnion, chart: Chart, is_target: bool) -> list[Domain]:
        out = []
        for branch in domains:
            constraints = []
            for c in branch.constraints:
                if is_target:
                    form = {
                        (v if v not in srcvars else f"{chart.name}.{v}"): n
                        for v, n in c.form
                    }
                    constraints.append(ValuationConstraint.of(
                        form, c.relation, c.bound, c.shift, label=c.label))
                else:
                    constraints.append(c)
            out.append(Domain(tuple(constraints)))
        return out

    branches: list[Domain] = list(transition.overlap)
    if include_domains:
        merged: list[Domain] = []
        tgt = rename(transition.target.domain, transition.target, True)
        for b in branches:
            for s in transition.source.domain:
                for t in tgt:
                    merged.append(Domain(tuple(b.constraints) +
                                         tuple(s.constraints) +
                                         tuple(t.constraints)))
        branches = merged
    result = feasible(tuple(branches), extra=relations)
    if not exact:
        return FeasibilityResult(result.feasible, result.witness,
                                 result.certificate, result.branch,
                                 approximate=True)
    return result


# ---- atlas ---------------------------------------------------------


@dataclass(frozen=True)
class Atlas:
    """Charts, transitions and declared loops for cocycle checking."""

    charts: tuple[Chart, ...]
    transitions: tuple[Transition, ...]
    loops: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        names = [c.name for c in self.charts]
        if len(names) != len(set(names)):
            raise ValueError("chart names must be unique")
        ids = [t.id for t in self.transitions]
        if len(ids) != len(set(ids)):
            raise ValueError("transition ids must be unique")
        for loop in self.loops:
            chain = [self.transition(step) for step in loop]
            for a, b in zip(chain, chain[1:]):
                if a.target.name != b.source.name:
                    raise ChartMismatch(f"loop {loop} breaks at {a.id!r} -> {b.id!r}")
            if chain and chain[0].source.name != chain[-1].target.name:
                raise ChartMismatch(f"loop {loop} does not close")

    def chart(self, name: str) -> Chart:
        for c in self.charts:
            if c.name == name:
                return c
        raise UnknownChart(f"no chart named {name!r}")

    def transition(self, ref: str) -> Transition:
        """Resolve a transition id; a ``~`` prefix takes the declared inverse."""
        reverse = ref.startswith("~")
        key = ref[1:] if reverse else ref
        for t in self.transitions:
            if t.id == key:
                return t.reversed() if reverse else t
        raise UnknownTransition(f"no transition named {key!r}")

    def loop_transitions(self, loop: Sequence[str]) -> list[Transition]:
        return [self.transition(step) for step in loop]

    def validate(self, energy=None, degree=None) -> "AtlasReport":
        matches = tuple(check_potential_match(t, energy, degree)
                        for t in self.transitions)
        cocycles = tuple(verify_cocycle(self.loop_transitions(loop), energy, degree)
                         for loop in self.loops)
        return AtlasReport(matches, cocycles)


@dataclass(frozen=True)
class AtlasReport:
    potential_matches: tuple[PotentialMatchReport, ...]
    cocycles: tuple[CocycleReport, ...]

    @property
    def ok(self) -> bool:
        return all(m.ok for m in self.potential_matches) and \
            all(c.ok for c in self.cocycles)


# ---- serialization -------------------------------------------------


def _map_to_json(tmap: tuple[tuple[str, MultiSeries], ...]) -> dict:
    return {var: series_to_json(series) for var, series in tmap}


def atlas_to_json(atlas: Atlas) -> dict:
    charts = []
    for c in atlas.charts:
        charts.append({
            "name": c.name,
            "vars": list(c.variables),
            "domain": domains_to_json(c.domain),
            "potential": series_to_json(c.potential),
        })
    transitions = []
    for t in atlas.transitions:
        obj = {
            "id": t.id,
            "src": t.source.name,
            "dst": t.target.name,
            "overlap": domains_to_json(t.overlap),
            "map": _map_to_json(t.tmap),
        }
        if t.inverse_tmap is not None:
            inv: dict = {"map": _map_to_json(t.inverse_tmap)}
            if t.inverse_overlap is not None:
                inv["overlap"] = domains_to_json(t.inverse_overlap)
            obj["inverse"] = inv
        transitions.append(obj)
    return {"charts": charts, "transitions": transitions,
            "loops": [list(loop) for loop in atlas.loops]}


def atlas_from_json(obj: dict, *, energy=INF, degree=INF,
                    source: str | None = None) -> Atlas:
    def fail(where: str, message: str):
        raise ParseError(f"{where}: {message}", source=source)

    if not isinstance(obj, dict):
        fail("top level", "atlas must be an object")
    charts: dict[str, Chart] = {}
    for i, c in enumerate(obj.get("charts", [])):
        where = f"charts[{i}]"
        try:
            variables = tuple(str(v) for v in c["vars"])
            domain = domains_from_json(c.get("domain", []))
            potential = series_from_json(c.get("potential", []),
                                         variables, energy=energy, degree=degree)
            chart = Chart(str(c["name"]), variables, domain, potential)
        except ParseError:
            raise
        except (KeyError, ValueError, VariableMismatch) as exc:
            fail(where, str(exc))
        charts[chart.name] = chart
    transitions = []
    for i, t in enumerate(obj.get("transitions", [])):
        where = f"transitions[{i}]"
        try:
            src = charts[str(t["src"])]
            dst = charts[str(t["dst"])]
        except KeyError as exc:
            fail(where, f"unknown chart {exc}")
        try:
            tmap = tuple(
                (str(var), series_from_json(series, src.variables,
                                            energy=energy, degree=degree))
                for var, series in t["map"].items())
            overlap = domains_from_json(t["overlap"]) if "overlap" in t \
                else src.domain
            inverse_tmap = None
            inverse_overlap = None
            if "inverse" in t:
                inv = t["inverse"]
                imap = inv["map"] if isinstance(inv, dict) and "map" in inv else inv
                inverse_tmap = tuple(
                    (str(var), series_from_json(series, dst.variables,
                                                energy=energy, degree=degree))
                    for var, series in imap.items())
                if isinstance(inv, dict) and "overlap" in inv:
                    inverse_overlap = domains_from_json(inv["overlap"])
            transitions.append(Transition(
                id=str(t["id"]), source=src, target=dst, tmap=tmap,
                overlap=overlap, inverse_tmap=inverse_tmap,
                inverse_overlap=inverse_overlap))
        except ParseError:
            raise
        except (KeyError, ValueError, VariableMismatch) as exc:
            fail(where, str(exc))
    loops = tuple(tuple(str(step) for step in loop)
                  for loop in obj.get("loops", []))
    try:
        return Atlas(tuple(charts.values()), tuple(transitions), loops)
    except (ValueError, ChartMismatch, UnknownTransition) as exc:
        fail("atlas", str(exc))
