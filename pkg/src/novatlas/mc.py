"""Deformed operations from finite disc-contribution data.

Disc contributions are input data: one rigid polygon each, recorded as an
ordered corner word, an output generator, an area, a sign, and holonomy
crossings.  Evaluating a contribution multiplies ``sign * T^area`` by the
holonomy variables and by the deformation variables of its corners, the
coefficient word being assembled back to front.  Corners without a
deformation variable (morphism insertions, units, point classes) are
structural and contribute nothing.

On top of the evaluator sit the curvature classifier, the differential
between decorated objects, the cocycle solver that extracts gluing
relations, and the isomorphism witness check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import multiseries
from .errors import NonInvertibleSeries, NotSolvable, ParseError
from .multiseries import Monomial, MultiSeries, build, series_to_json
from .novikov import NovikovScalar, monomial as t_power
from .rationals import INF, parse_fraction

PARITIES = ("even", "odd")
KINDS = ("unit", "point-class", "immersed", "intersection", "morse")


@dataclass(frozen=True)
class Generator:
    """A Floer generator: unit, point class, immersed or intersection point,
    or a Morse critical point."""

    name: str
    parity: str
    kind: str

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise ValueError(f"parity must be one of {PARITIES}")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")


@dataclass(frozen=True)
class HolonomyFactor:
    """A signed count of crossings through one gauge hypertorus."""

    variable: str
    crossings: int

    def __post_init__(self):
        if self.crossings == 0:
            raise ValueError("holonomy factors record nonzero crossing counts")


@dataclass(frozen=True)
class DiscContribution:
    """One polygon's record: corners, output, area, sign, holonomy."""

    corners: tuple[Generator, ...]
    output: Generator
    area: Fraction
    sign: int
    holonomy: tuple[HolonomyFactor, ...] = ()

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.area < 0:
            raise ValueError("area must be nonnegative")

    @property
    def arity(self) -> int:
        return len(self.corners)


@dataclass(frozen=True)
class DeformationData:
    """Formal deformation variables for odd generators, plus gauge variables."""

    variables: tuple[tuple[Generator, str], ...]
    commutative: bool = True
    gauge_variables: tuple[str, ...] = ()

    def __post_init__(self):
        names = [v for _, v in self.variables]
        if len(names) != len(set(names)):
            raise ValueError("deformation variables must be distinct")
        for gen, _ in self.variables:
            if gen.parity != "odd":
                raise ValueError(f"deformation generator {gen.name!r} must be odd")
        if set(names) & set(self.gauge_variables):
            raise ValueError("gauge variables must not collide with deformation variables")

    def variable_of(self, gen: Generator) -> str | None:
        for g, v in self.variables:
            if g.name == gen.name:
                return v
        return None

    def var_space(self) -> frozenset[str]:
        return frozenset(v for _, v in self.variables) | frozenset(self.gauge_variables)


@dataclass(frozen=True)
class WordSeries:
    """Noncommutative output: scalar coefficients on (word, gauge monomial) keys.

    Words are reported verbatim in back-to-front order, never reordered.
    """

    terms: tuple[tuple[tuple[str, ...], Monomial, NovikovScalar], ...]

    def is_zero(self) -> bool:
        return not self.terms

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for word, gauge, coeff in self.terms:
            w = "*".join(word) if word else "1"
            g = str(gauge)
            body = w if g == "1" else f"{g}*{w}" if w != "1" else g
            parts.append(f"({coeff})*{body}")
        return " + ".join(parts)


def _word_series(acc: dict) -> WordSeries:
    kept = []
    for (word, gauge), coeff in acc.items():
        if not coeff.is_zero():
            kept.append((word, gauge, coeff))
    kept.sort(key=lambda item: (item[0], item[1].exponents))
    return WordSeries(tuple(kept))


def evaluate_contributions(contribs: Iterable[DiscContribution],
                           deformation: DeformationData,
                           energy=INF, degree=INF):
    """Total series per output generator.

    Returns ``dict[Generator, MultiSeries]`` in commutative mode and
    ``dict[Generator, WordSeries]`` otherwise.  Immersed or Morse corners
    without a declared deformation variable are rejected.
    """
    variables = deformation.var_space()
    comm_acc: dict[Generator, dict[Monomial, NovikovScalar]] = {}
    word_acc: dict[Generator, dict] = {}
    for contrib in contribs:
        word: list[str] = []
        for corner in contrib.corners:
            var = deformation.variable_of(corner)
            if var is not None:
                word.append(var)
            elif corner.kind in ("immersed", "morse") and corner.parity == "odd":
                raise ValueError(
                    f"corner {corner.name!r} carries no deformation variable")
        word.reverse()  # coefficients pull out from the back
        gauge = Monomial.of({h.variable: h.crossings for h in contrib.holonomy})
        scalar = t_power(contrib.area, contrib.sign)
        if deformation.commutative:
            mono = gauge * Monomial.of({})
            for v in word:
                mono = mono * Monomial.of({v: 1})
            slot = comm_acc.setdefault(contrib.output, {})
            slot[mono] = slot[mono] + scalar if mono in slot else scalar
        else:
            key = (tuple(word), gauge)
            slot = word_acc.setdefault(contrib.output, {})
            slot[key] = slot[key] + scalar if key in slot else scalar
    if deformation.commutative:
        return {gen: build(variables, terms, energy=energy, degree=degree)
                for gen, terms in comm_acc.items()}
    return {gen: _word_series(terms) for gen, terms in word_acc.items()}


def m0_deformed(contribs: Iterable[DiscContribution],
                deformation: DeformationData,
                energy=INF, degree=INF):
    """Curvature of the deformed object, one series per output generator."""
    return evaluate_contributions(contribs, deformation, energy, degree)


def m1_between(contribs: Iterable[DiscContribution],
               deformation: DeformationData,
               source: Generator,
               energy=INF, degree=INF):
    """Differential coefficients out of one input generator.

    Each contribution's corner word must contain the source generator,
    surrounded by boundary deformation insertions.
    """
    contribs = list(contribs)
    for contrib in contribs:
        if all(c.name != source.name for c in contrib.corners):
            raise ValueError(
                f"contribution to {contrib.output.name!r} does not involve "
                f"the source generator {source.name!r}")
    return evaluate_contributions(contribs, deformation, energy, degree)


# ---- obstruction classification -----------------------------------


class ObstructionKind:
    UNOBSTRUCTED = "unobstructed"
    WEAKLY = "weakly-unobstructed"
    OBSTRUCTED = "obstructed"


@dataclass(frozen=True)
class Classification:
    kind: str
    potential: MultiSeries | WordSeries | None = None
    offender: Generator | None = None
    residue: MultiSeries | WordSeries | None = None


def classify_obstruction(components: Mapping[Generator, object]) -> Classification:
    """Zero curvature, unit multiple, or a genuine obstruction.

    Unobstructed when every component vanishes; weakly unobstructed when
    only the unit component survives (its series is the potential);
    obstructed otherwise, naming the offending generator.
    """
    nonzero = {gen: series for gen, series in components.items()
               if not series.is_zero()}
    if not nonzero:
        return Classification(ObstructionKind.UNOBSTRUCTED)
    offenders = sorted((gen for gen in nonzero if gen.kind != "unit"),
                       key=lambda g: g.name)
    if not offenders:
        unit_gen = next(iter(nonzero))
        return Classification(ObstructionKind.WEAKLY, potential=nonzero[unit_gen])
    return Classification(ObstructionKind.OBSTRUCTED,
                          offender=offenders[0],
                          residue=nonzero[offenders[0]])


# ---- cocycle solving ----------------------------------------------


@dataclass(frozen=True)
class GluingRelation:
    variable: str
    value: MultiSeries


def _affine_split(series: MultiSeries, var: str) -> tuple[MultiSeries, MultiSeries]:
    linear: dict[Monomial, NovikovScalar] = {}
    rest: dict[Monomial, NovikovScalar] = {}
    for mono, coeff in series.terms:
        e = mono.exponent(var)
        if e == 0:
            rest[mono] = coeff
        elif e == 1:
            linear[mono.without(var)] = coeff
        else:
            raise NotSolvable(
                f"equation is not affine in {var!r} (found power {e})")
    a = build(series.variables, linear,
              energy=series.energy_cutoff, degree=series.degree_cutoff)
    b = build(series.variables, rest,
              energy=series.energy_cutoff, degree=series.degree_cutoff)
    return a, b


def solve_cocycle(equations: Sequence[tuple[Generator, MultiSeries]] |
                  Mapping[Generator, MultiSeries],
                  unknowns: Sequence[str]) -> tuple[GluingRelation, ...]:
    """Solve ordered cocycle equations for the given unknowns.

    The i-th equation must be affine in the i-th unknown with an invertible
    coefficient; each solved relation is substituted into the remaining
    equations, and leftover equations must vanish.
    """
    if isinstance(equations, Mapping):
        items = list(equations.items())
    else:
        items = list(equations)
    if len(unknowns) > len(items):
        raise NotSolvable(
            f"{len(unknowns)} unknowns but only {len(items)} equations")
    relations: list[GluingRelation] = []
    series_list = [series for _, series in items]
    for index, var in enumerate(unknowns):
        series = series_list[index]
        if var not in series.variables:
            raise NotSolvable(f"unknown {var!r} is not an ambient variable")
        a, b = _affine_split(series, var)
        if a.is_zero():
            raise NotSolvable(f"unknown {var!r} does not occur in its equation")
        try:
            inv = a.invert()
        except NonInvertibleSeries as exc:
            raise NotSolvable(
                f"coefficient of {var!r} is not invertible: {exc}") from exc
        value = -(b * inv)
        relations.append(GluingRelation(var, value))
        assignment = {
            v: (value if v == var else multiseries.variable(series.variables, v))
            for v in series.variables
        }
        for later in range(index + 1, len(series_list)):
            series_list[later] = series_list[later].substitute(assignment)
    for index in range(len(unknowns), len(series_list)):
        if not series_list[index].is_zero():
            gen, _ = items[index]
            raise NotSolvable(
                f"equation for {gen.name!r} does not vanish under the solved relations")
    return tuple(relations)


def relations_assignment(relations: Iterable[GluingRelation],
                         variables: Iterable[str]) -> dict[str, MultiSeries]:
    """Substitution map installing the relations, identity elsewhere."""
    varset = frozenset(variables)
    out: dict[str, MultiSeries] = {}
    for rel in relations:
        out[rel.variable] = rel.value.with_variables(varset)
    for v in varset:
        if v not in out:
            out[v] = multiseries.variable(varset, v)
    return out


# ---- isomorphism witnesses ------------------------------------------


@dataclass(frozen=True)
class DirectionReport:
    ok: bool
    unit_factor: NovikovScalar | None
    residuals: tuple[tuple[str, MultiSeries], ...]


@dataclass(frozen=True)
class IsomorphismReport:
    ok: bool
    forward: DirectionReport
    backward: DirectionReport


def _direction_report(components: Mapping[Generator, MultiSeries],
                      assignment: Mapping[str, MultiSeries]) -> DirectionReport:
    unit_gens = [gen for gen in components if gen.kind == "unit"]
    if len(unit_gens) != 1:
        return DirectionReport(False, None, tuple(
            (gen.name, series) for gen, series in sorted(
                components.items(), key=lambda kv: kv[0].name)))
    unit_gen = unit_gens[0]
    residuals = []
    ok = True
    factor: NovikovScalar | None = None
    for gen, series in sorted(components.items(), key=lambda kv: kv[0].name):
        reduced = series.substitute(assignment) if assignment else series
        if gen.name == unit_gen.name:
            extra = {m: c for m, c in reduced.terms if m.exponents}
            factor = reduced.constant_scalar()
            if extra or factor.is_zero():
                ok = False
                residuals.append((gen.name, reduced))
        elif not reduced.is_zero():
            ok = False
            residuals.append((gen.name, reduced))
    return DirectionReport(ok, factor, tuple(residuals))


def check_isomorphism_pair(forward: Mapping[Generator, MultiSeries],
                           backward: Mapping[Generator, MultiSeries],
                           relations: Iterable[GluingRelation] = ()) -> IsomorphismReport:
    """Both compositions must reduce to an invertible multiple of the unit.

    A unit coefficient ``c*T^e`` with nonzero ``c`` is accepted; every other
    component must vanish once the solved relations are installed.
    """
    relations = tuple(relations)

    def assignment_for(components: Mapping[Generator, MultiSeries]):
        if not relations or not components:
            return {}
        variables = next(iter(components.values())).variables
        return relations_assignment(relations, variables)

    fwd = _direction_report(forward, assignment_for(forward))
    bwd = _direction_report(backward, assignment_for(backward))
    return IsomorphismReport(fwd.ok and bwd.ok, fwd, bwd)


# ---- dataset parsing ------------------------------------------------


@dataclass(frozen=True)
class PairSection:
    """Contributions for an ordered pair of decorated objects."""

    name: str
    kind: str  # "differential" or "composition"
    source: Generator | None
    unit: Generator | None
    contributions: tuple[DiscContribution, ...]


@dataclass(frozen=True)
class MCData:
    name: str
    generators: tuple[Generator, ...]
    deformation: DeformationData
    m0: tuple[DiscContribution, ...]
    pairs: tuple[PairSection, ...] = ()

    def generator(self, name: str) -> Generator:
        for g in self.generators:
            if g.name == name:
                return g
        raise KeyError(f"no generator named {name!r}")

    def pair(self, name: str) -> PairSection:
        for p in self.pairs:
            if p.name == name:
                return p
        raise KeyError(f"no object pair named {name!r}")


def disc_data_from_json(obj: dict, *, source: str | None = None) -> MCData:
    def fail(where: str, message: str):
        raise ParseError(f"{where}: {message}", source=source)

    if not isinstance(obj, dict):
        fail("top level", "disc data must be an object")
    generators: dict[str, Generator] = {}
    for i, g in enumerate(obj.get("generators", [])):
        try:
            gen = Generator(str(g["name"]), str(g["parity"]), str(g["kind"]))
        except (KeyError, ValueError) as exc:
            fail(f"generators[{i}]", str(exc))
        generators[gen.name] = gen

    def resolve(name: str, where: str) -> Generator:
        if name not in generators:
            fail(where, f"unknown generator {name!r}")
        return generators[name]

    deff = obj.get("deformation", {})
    variables = tuple(
        (resolve(str(gname), "deformation"), str(var))
        for gname, var in deff.get("variables", {}).items())
    try:
        deformation = DeformationData(
            variables=tuple(sorted(variables, key=lambda kv: kv[0].name)),
            commutative=bool(deff.get("commutative", True)),
            gauge_variables=tuple(str(v) for v in deff.get("gauge", [])))
    except ValueError as exc:
        fail("deformation", str(exc))

    pair_specs: dict[str, dict] = {}
    for i, p in enumerate(obj.get("object_pairs", [])):
        where = f"object_pairs[{i}]"
        name = str(p.get("name", ""))
        if not name:
            fail(where, "pair needs a name")
        kind = str(p.get("kind", ""))
        if kind not in ("differential", "composition"):
            fail(where, f"unknown pair kind {kind!r}")
        pair_specs[name] = {
            "kind": kind,
            "source": resolve(str(p["source"]), where) if "source" in p else None,
            "unit": resolve(str(p["unit"]), where) if "unit" in p else None,
            "contribs": [],
        }
        if kind == "differential" and pair_specs[name]["source"] is None:
            fail(where, "differential pair needs a source generator")

    m0: list[DiscContribution] = []
    for i, c in enumerate(obj.get("contributions", [])):
        where = f"contributions[{i}]"
        try:
            contrib = DiscContribution(
                corners=tuple(resolve(str(n), where) for n in c.get("corners", [])),
                output=resolve(str(c["output"]), where),
                area=parse_fraction(c.get("area", 0)),
                sign=int(c.get("sign", 1)),
                holonomy=tuple(HolonomyFactor(str(h["var"]), int(h["power"]))
                               for h in c.get("holonomy", [])))
        except ParseError:
            raise
        except (KeyError, ValueError) as exc:
            fail(where, str(exc))
        pair = c.get("pair")
        if pair is None:
            m0.append(contrib)
        elif str(pair) in pair_specs:
            pair_specs[str(pair)]["contribs"].append(contrib)
        else:
            fail(where, f"unknown object pair {pair!r}")

    pairs = tuple(
        PairSection(name, spec["kind"], spec["source"], spec["unit"],
                    tuple(spec["contribs"]))
        for name, spec in pair_specs.items())
    return MCData(str(obj.get("name", "")), tuple(generators.values()),
                  deformation, tuple(m0), pairs)


def disc_data_to_json(data: MCData) -> dict:
    out: dict = {
        "name": data.name,
        "generators": [
            {"name": g.name, "parity": g.parity, "kind": g.kind}
            for g in data.generators
        ],
        "deformation": {
            "variables": {g.name: v for g, v in data.deformation.variables},
            "commutative": data.deformation.commutative,
            "gauge": list(data.deformation.gauge_variables),
        },
        "object_pairs": [],
        "contributions": [],
    }
    for p in data.pairs:
        spec: dict = {"name": p.name, "kind": p.kind}
        if p.source is not None:
            spec["source"] = p.source.name
        if p.unit is not None:
            spec["unit"] = p.unit.name
        out["object_pairs"].append(spec)

    def contrib_json(c: DiscContribution, pair: str | None) -> dict:
        obj: dict = {
            "corners": [g.name for g in c.corners],
            "output": c.output.name,
            "area": str(c.area),
            "sign": c.sign,
            "holonomy": [{"var": h.variable, "power": h.crossings}
                         for h in c.holonomy],
        }
        if pair is not None:
            obj["pair"] = pair
        return obj

    for c in data.m0:
        out["contributions"].append(contrib_json(c, None))
    for p in data.pairs:
        for c in p.contributions:
            out["contributions"].append(contrib_json(c, p.name))
    return out
