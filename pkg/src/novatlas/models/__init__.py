"""Bundled worked models: fixture files plus expected-result manifests.

Each model directory holds an ``atlas.json``, a ``params.json`` with one or
more named parameter assignments (areas as exact rationals), optional disc
data and constraint files, and a ``manifest.json`` of checks with expected
outcomes.  Exponent-like fields in the data files (``exp``, ``area``,
``bound``, ``shift``) may be affine expressions in the parameter names;
they are resolved to exact rationals at load time.

See ``data/SCHEMA.md`` for the file formats.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .. import mc as mc_mod
from ..atlas import (
    Atlas,
    atlas_from_json,
    check_potential_match,
    compose_chain,
    overlap_feasibility,
    transition_valuation_relations,
    verify_cocycle,
)
from ..constraints import (
    Domain,
    ValuationConstraint,
    constraint_from_json,
    feasible,
)
from ..crit import CritConfig, critical_locus
from ..errors import ParseError, UnknownModel
from ..mc import MCData, disc_data_from_json
from ..multiseries import Monomial, MultiSeries, agree as series_agree, build
from ..novikov import parse_scalar
from ..rationals import INF, parse_fraction

DATA_DIR = Path(__file__).parent / "data"

MODEL_DIRS = {
    "p1": "p1",
    "pants": "pants",
    "four-punctured": "four_punctured",
    "paradox": "paradox",
    "three-pants": "three_pants",
    "wall-crossing": "wall_crossing",
}

MODEL_NAMES = tuple(MODEL_DIRS)

DEFAULT_ENERGY = Fraction(5)
DEFAULT_DEGREE = 8

_RATIONAL_KEYS = {"exp", "area", "bound", "shift"}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/()]))")


def resolve_expression(text: object, params: Mapping[str, Fraction],
                       where: str = "") -> Fraction:
    """Evaluate a parameter expression to an exact rational.

    Supports rationals, parameter names, ``+ - * /``, parentheses and unary
    minus, e.g. ``"A1+A2+A3+A4+A5-A7"`` or ``"B7/2"``.
    """
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    tokens: list[str] = []
    pos = 0
    text = str(text)
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"{where}: bad token in expression {text!r}")
        tokens.append(m.group("num") or m.group("name") or m.group("op"))
        pos = m.end()

    index = 0

    def peek() -> str | None:
        return tokens[index] if index < len(tokens) else None

    def take() -> str:
        nonlocal index
        index += 1
        return tokens[index - 1]

    def factor() -> Fraction:
        tok = peek()
        if tok is None:
            raise ParseError(f"{where}: truncated expression {text!r}")
        if tok == "-":
            take()
            return -factor()
        if tok == "(":
            take()
            value = expression()
            if peek() != ")":
                raise ParseError(f"{where}: unbalanced parentheses in {text!r}")
            take()
            return value
        take()
        if re.fullmatch(r"\d+(?:/\d+)?", tok):
            return Fraction(tok)
        if tok in params:
            return params[tok]
        raise ParseError(f"{where}: unknown parameter {tok!r} in {text!r}")

    def term() -> Fraction:
        value = factor()
        while peek() in ("*", "/"):
            op = take()
            rhs = factor()
            value = value * rhs if op == "*" else value / rhs
        return value

    def expression() -> Fraction:
        value = term()
        while peek() in ("+", "-"):
            op = take()
            rhs = term()
            value = value + rhs if op == "+" else value - rhs
        return value

    out = expression()
    if index != len(tokens):
        raise ParseError(f"{where}: trailing input in expression {text!r}")
    return out


def resolve_parameters(obj: object, params: Mapping[str, Fraction],
                       where: str = "") -> object:
    """Deep-copy a JSON structure, resolving parameter expressions in
    exponent-like fields."""
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if key in _RATIONAL_KEYS and isinstance(value, str):
                out[key] = resolve_expression(value, params, f"{where}.{key}")
            else:
                out[key] = resolve_parameters(value, params, f"{where}.{key}")
        return out
    if isinstance(obj, list):
        return [resolve_parameters(item, params, f"{where}[{i}]")
                for i, item in enumerate(obj)]
    return obj


def _load_json(path: Path) -> object:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ParseError("file not found", source=str(path))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, source=str(path), line=exc.lineno,
                         column=exc.colno)


@dataclass(frozen=True)
class ModelBundle:
    """One bundled model: raw files plus parameterizations and manifest."""

    name: str
    root: Path
    parameterizations: dict[str, dict[str, Fraction]]
    manifest: dict
    atlas_raw: dict
    disc_raw: dict[str, dict]
    constraint_raw: dict[str, dict]

    def params(self, which: str = "default") -> dict[str, Fraction]:
        if which not in self.parameterizations:
            raise ParseError(f"model {self.name!r} has no parameterization {which!r}")
        return self.parameterizations[which]

    def atlas(self, params: str = "default", energy=INF, degree=INF) -> Atlas:
        resolved = resolve_parameters(self.atlas_raw, self.params(params),
                                      f"{self.name}/atlas")
        return atlas_from_json(resolved, energy=energy, degree=degree,
                               source=str(self.root / "atlas.json"))

    def discs(self, filename: str, params: str = "default") -> MCData:
        if filename not in self.disc_raw:
            raise ParseError(f"model {self.name!r} has no disc file {filename!r}")
        resolved = resolve_parameters(self.disc_raw[filename], self.params(params),
                                      f"{self.name}/{filename}")
        return disc_data_from_json(resolved, source=str(self.root / filename))

    def constraints(self, filename: str, params: str = "default") \
            -> tuple[list[str], list[ValuationConstraint]]:
        if filename not in self.constraint_raw:
            raise ParseError(f"model {self.name!r} has no constraint file {filename!r}")
        resolved = resolve_parameters(self.constraint_raw[filename],
                                      self.params(params),
                                      f"{self.name}/{filename}")
        variables = [str(v) for v in resolved.get("variables", [])]
        constraints = [constraint_from_json(c)
                       for c in resolved.get("constraints", [])]
        return variables, constraints


def load_model(name: str) -> ModelBundle:
    """Load a bundled model by its public name."""
    if name not in MODEL_DIRS:
        raise UnknownModel(
            f"unknown model {name!r}; bundled models: {', '.join(MODEL_NAMES)}")
    root = DATA_DIR / MODEL_DIRS[name]
    params_obj = _load_json(root / "params.json")
    parameterizations = {
        str(which): {str(k): parse_fraction(v) for k, v in table.items()}
        for which, table in params_obj.items()
    }
    if "default" not in parameterizations:
        raise ParseError("params.json must define a 'default' parameterization",
                         source=str(root / "params.json"))
    manifest = _load_json(root / "manifest.json")
    atlas_raw = _load_json(root / "atlas.json")
    disc_raw = {}
    constraint_raw = {}
    for path in sorted(root.glob("*.json")):
        if path.name in ("params.json", "manifest.json", "atlas.json"):
            continue
        if path.name.startswith("discs"):
            disc_raw[path.name] = _load_json(path)
        elif path.name.startswith("constraints"):
            constraint_raw[path.name] = _load_json(path)
    return ModelBundle(name, root, parameterizations, manifest, atlas_raw,
                       disc_raw, constraint_raw)


# ---- manifest execution ---------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    kind: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ManifestReport:
    model: str
    results: tuple[CheckResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)


def _expected_series(spec: Sequence[dict], variables, energy, degree) -> MultiSeries:
    terms = []
    for item in spec:
        mono = Monomial.of({str(v): int(e)
                            for v, e in item.get("monomial", {}).items()})
        terms.append((mono, parse_scalar(item["coeff"])))
    return build(variables, terms, energy=energy, degree=degree)


def _series_matches(actual: MultiSeries, spec: Sequence[dict]) -> bool:
    expected = _expected_series(spec, actual.variables,
                                actual.energy_cutoff, actual.degree_cutoff)
    return series_agree(actual, expected)


def _relations_from(bundle: ModelBundle, spec: dict, params: str,
                    energy, degree):
    data = bundle.discs(str(spec["discs"]), params)
    pair = data.pair(str(spec["pair"]))
    diff = mc_mod.m1_between(pair.contributions, data.deformation, pair.source,
                             energy=energy, degree=degree)
    zero_series = build(data.deformation.var_space(), {},
                        energy=energy, degree=degree)
    ordered = []
    for name in spec["equations"]:
        gen = data.generator(str(name))
        ordered.append((gen, diff.get(gen, zero_series)))
    return mc_mod.solve_cocycle(ordered, [str(u) for u in spec["unknowns"]])


def run_manifest(bundle: ModelBundle, energy=None, degree=None) -> ManifestReport:
    """Execute every declared check, collecting failures without aborting."""
    defaults = bundle.manifest.get("defaults", {})
    if energy is None:
        energy = parse_fraction(defaults.get("energy", DEFAULT_ENERGY))
    if degree is None:
        degree = int(defaults.get("degree", DEFAULT_DEGREE))
    results: list[CheckResult] = []
    for check in bundle.manifest.get("checks", []):
        name = str(check.get("name", check.get("type", "?")))
        kind = str(check["type"])
        try:
            passed, detail = _run_check(bundle, check, energy, degree)
        except Exception as exc:  # collected, never aborts the run
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, kind, passed, detail))
    return ManifestReport(bundle.name, tuple(results))


def _check_feasible(bundle: ModelBundle, check: dict, params: str) -> tuple[bool, str]:
    extra: list[ValuationConstraint] = []
    variables: list[str] = []
    if "constraints_file" in check:
        variables, file_constraints = bundle.constraints(
            str(check["constraints_file"]), params)
        extra.extend(file_constraints)
    for c in check.get("constraints", []):
        resolved = resolve_parameters(c, bundle.params(params), "manifest")
        extra.append(constraint_from_json(resolved))
    if "with_transition" in check:
        atl = bundle.atlas(params)
        transition = atl.transition(str(check["with_transition"]))
        if extra:
            relations, _ = transition_valuation_relations(transition)
            result = feasible((Domain(tuple(extra)),), extra=relations)
        else:
            result = overlap_feasibility(transition)
    else:
        result = feasible((Domain(tuple(extra)),), variables=variables)
    expect_feasible = str(check.get("expect", "feasible")) == "feasible"
    passed = result.feasible == expect_feasible
    if result.feasible and "witness_vals" in check:
        for var, value in check["witness_vals"].items():
            want = resolve_expression(value, bundle.params(params), "manifest")
            if result.witness.get(str(var)) != want:
                passed = False
    detail = f"witness {result.witness}" if result.feasible \
        else f"certificate {result.certificate}"
    return passed, detail


def _check_critical(bundle: ModelBundle, check: dict, params: str,
                    energy, degree) -> tuple[bool, str]:
    atl = bundle.atlas(params)
    chart = atl.chart(str(check["chart"]))
    report = critical_locus(chart, CritConfig(energy=energy))
    expect = check.get("expect", {})
    ok = True
    details = []
    points = expect.get("points")
    if points is not None:
        if len(points) != len(report.points):
            ok = False
        else:
            for spec, point in zip(points, report.points):
                for var, literal in spec["coordinates"].items():
                    want = parse_scalar(literal)
                    got = point.point()[str(var)]
                    cut = min(got.cutoff, energy)
                    if got.truncate(cut) != want.truncate(cut):
                        ok = False
                want_value = parse_scalar(spec["value"])
                cut = min(point.value.cutoff, energy)
                if point.value.truncate(cut) != want_value.truncate(cut):
                    ok = False
        details.append(f"{len(report.points)} points")
    components = expect.get("components")
    if components is not None:
        got = sorted(tuple(c.pinned) for c in report.components)
        want = sorted(tuple(str(v) for v in c) for c in components)
        ok = ok and got == want
        details.append(f"components {got}")
    excluded = expect.get("excluded_components")
    if excluded is not None:
        got = sorted(tuple(c.pinned) for c in report.excluded_components)
        want = sorted(tuple(str(v) for v in c) for c in excluded)
        ok = ok and got == want
        details.append(f"excluded {got}")
    return ok, "; ".join(details) or "checked"


def _run_check(bundle: ModelBundle, check: dict, energy, degree) -> tuple[bool, str]:
    kind = str(check["type"])
    params = str(check.get("params", "default"))
    if kind == "potential_match":
        atl = bundle.atlas(params)
        report = check_potential_match(atl.transition(str(check["transition"])),
                                       energy, degree)
        want_ok = check.get("expect", "ok") == "ok"
        detail = "residual 0" if report.ok else f"residual {report.residual}"
        return report.ok == want_ok, detail
    if kind == "compose_equals":
        atl = bundle.atlas(params)
        chain = [atl.transition(str(step)) for step in check["chain"]]
        composite = compose_chain(chain)
        ok = True
        details = []
        for var, spec in check["expect_map"].items():
            actual = dict(composite.tmap)[str(var)]
            ok = ok and _series_matches(actual, spec)
            details.append(f"{var} = {actual}")
        return ok, "; ".join(details)
    if kind == "cocycle":
        atl = bundle.atlas(params)
        report = verify_cocycle(
            atl.loop_transitions([str(s) for s in check["loop"]]), energy, degree)
        expect = str(check.get("expect", "identity"))
        return report.status.value == expect, f"status {report.status.value}"
    if kind == "feasible":
        return _check_feasible(bundle, check, params)
    if kind == "mc_classify":
        data = bundle.discs(str(check["discs"]), params)
        components = mc_mod.m0_deformed(data.m0, data.deformation,
                                        energy=energy, degree=degree)
        outcome = mc_mod.classify_obstruction(components)
        expect = check["expect"]
        if isinstance(expect, dict):
            if outcome.kind != mc_mod.ObstructionKind.WEAKLY:
                return False, f"classified {outcome.kind}"
            ok = _series_matches(outcome.potential, expect["potential"])
            return ok, f"potential {outcome.potential}"
        return outcome.kind == expect, f"classified {outcome.kind}"
    if kind == "m1":
        data = bundle.discs(str(check["discs"]), params)
        pair = data.pair(str(check["pair"]))
        diff = mc_mod.m1_between(pair.contributions, data.deformation,
                                 pair.source, energy=energy, degree=degree)
        zero_series = build(data.deformation.var_space(), {},
                            energy=energy, degree=degree)
        ok = True
        details = []
        for gen_name, spec in check["expect"].items():
            gen = data.generator(str(gen_name))
            actual = diff.get(gen, zero_series)
            ok = ok and _series_matches(actual, spec)
            details.append(f"{gen_name} -> {actual}")
        return ok, "; ".join(details)
    if kind == "solve_cocycle":
        relations = _relations_from(bundle, check, params, energy, degree)
        expect = check["expect"]
        if list(expect) != [r.variable for r in relations]:
            return False, f"solved order {[r.variable for r in relations]}"
        ok = True
        details = []
        for relation in relations:
            ok = ok and _series_matches(relation.value, expect[relation.variable])
            details.append(f"{relation.variable} = {relation.value}")
        return ok, "; ".join(details)
    if kind == "isomorphism_pair":
        data = bundle.discs(str(check["discs"]), params)
        relations = ()
        if "relations_from" in check:
            relations = _relations_from(bundle, check["relations_from"],
                                        params, energy, degree)
        forward_pair = data.pair(str(check["forward"]))
        backward_pair = data.pair(str(check["backward"]))
        fwd = mc_mod.m0_deformed(forward_pair.contributions, data.deformation,
                                 energy=energy, degree=degree)
        bwd = mc_mod.m0_deformed(backward_pair.contributions, data.deformation,
                                 energy=energy, degree=degree)
        report = mc_mod.check_isomorphism_pair(fwd, bwd, relations)
        detail = f"forward unit {report.forward.unit_factor}, " \
                 f"backward unit {report.backward.unit_factor}"
        return report.ok == (check.get("expect", "ok") == "ok"), detail
    if kind == "critical":
        return _check_critical(bundle, check, params, energy, degree)
    raise ParseError(f"unknown manifest check type {kind!r}")
