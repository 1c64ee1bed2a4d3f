"""Command-line surface: parse model files, run validators, emit reports.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 on unreadable or malformed input.  JSON output is schema-stable; text
output is for humans.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .atlas import (
    Atlas,
    CocycleStatus,
    atlas_from_json,
    check_potential_match,
    transport_point,
    verify_cocycle,
)
from .constraints import Domain, domains_from_json, feasible
from .crit import CritConfig, critical_locus, report_to_json
from .errors import (
    NovatlasError,
    OutsideOverlap,
    ParseError,
    UnknownChart,
    UnknownModel,
    UnknownTransition,
    UnsupportedPotential,
)
from .mc import classify_obstruction, disc_data_from_json, m0_deformed, ObstructionKind
from .models import MODEL_DIRS, load_model, resolve_parameters
from .multiseries import series_to_json
from .novikov import parse_scalar, scalar_to_json
from .rationals import INF, parse_fraction

ENV_ENERGY = "NOVATLAS_ENERGY"
ENV_DEGREE = "NOVATLAS_DEGREE"


@dataclass(frozen=True)
class RunConfig:
    energy: Fraction
    degree: int
    fmt: str

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        energy = args.energy or os.environ.get(ENV_ENERGY) or "5"
        degree = args.degree if args.degree is not None else \
            int(os.environ.get(ENV_DEGREE, "8"))
        energy = parse_fraction(energy)
        if energy <= 0 or degree <= 0:
            raise ParseError("cutoffs must be positive")
        return cls(energy, degree, args.format)


def _emit(config: RunConfig, payload: dict, text: str) -> None:
    if config.fmt == "json":
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(text)


def _resolve_path(args, default: str | None = None) -> Path:
    if args.model:
        if args.model not in MODEL_DIRS:
            raise UnknownModel(
                f"unknown model {args.model!r}; bundled: {', '.join(MODEL_DIRS)}")
        bundle_dir = Path(__file__).parent / "models" / "data" / MODEL_DIRS[args.model]
        name = args.path or default
        if name is None:
            raise ParseError("a file name is required with --model for this command")
        return bundle_dir / name
    if args.path is None:
        raise ParseError("an input path is required (or use --model)")
    return Path(args.path)


def _load_json_file(path: Path) -> object:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ParseError("file not found", source=str(path))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, source=str(path), line=exc.lineno,
                         column=exc.colno)


def _load_atlas(args, config: RunConfig) -> Atlas:
    if args.model:
        return load_model(args.model).atlas(args.params)
    path = _resolve_path(args, "atlas.json")
    return atlas_from_json(_load_json_file(path), source=str(path))


def _parse_point(literal: str):
    point = {}
    for piece in literal.split(","):
        if "=" not in piece:
            raise ParseError(f"point literal needs var=scalar pairs, got {piece!r}")
        var, text = piece.split("=", 1)
        try:
            point[var.strip()] = parse_scalar(text)
        except ValueError as exc:
            raise ParseError(str(exc))
    return point


# ---- commands -------------------------------------------------------


def cmd_validate(args, config: RunConfig) -> int:
    atlas = _load_atlas(args, config)
    report = atlas.validate(config.energy, config.degree)
    payload = {
        "command": "validate",
        "ok": report.ok,
        "transitions": [
            {"id": m.transition, "ok": m.ok,
             "residual": series_to_json(m.residual)}
            for m in report.potential_matches
        ],
        "loops": [
            {"loop": list(c.loop), "status": c.status.value,
             "approximate_overlap": c.approximate,
             "residuals": {v: series_to_json(s) for v, s in c.residuals}}
            for c in report.cocycles
        ],
    }
    lines = [f"atlas validation: {'PASS' if report.ok else 'FAIL'}"]
    for m in report.potential_matches:
        lines.append(f"  transition {m.transition}: "
                     f"{'potential preserved' if m.ok else f'residual {m.residual}'}")
    for c in report.cocycles:
        lines.append(f"  loop {' -> '.join(c.loop)}: {c.status.value}")
        if c.status is CocycleStatus.FAILED:
            for v, s in c.residuals:
                if not s.is_zero():
                    lines.append(f"    residual {v}: {s}")
    _emit(config, payload, "\n".join(lines))
    return 0 if report.ok else 1


def cmd_critical(args, config: RunConfig) -> int:
    atlas = _load_atlas(args, config)
    chart = atlas.chart(args.chart)
    report = critical_locus(chart, CritConfig(energy=config.energy))
    payload = {"command": "critical", "chart": chart.name}
    payload.update(report_to_json(report))
    lines = [f"critical locus of chart {chart.name!r}:"]
    for p in report.points:
        coords = ", ".join(f"{v} = {s}" for v, s in p.coordinates)
        lines.append(f"  point: {coords}; value {p.value}")
    for comp in report.components:
        pinned = ", ".join(comp.pinned) if comp.pinned else "none"
        lines.append(f"  component: pinned {{{pinned}}}, free "
                     f"{{{', '.join(comp.free) or 'none'}}}")
    for p in report.excluded_points:
        coords = ", ".join(f"{v} = {s}" for v, s in p.coordinates)
        lines.append(f"  outside domain: {coords}")
    for comp in report.excluded_components:
        lines.append(f"  outside domain: pinned {{{', '.join(comp.pinned)}}}")
    for s in report.symbolic:
        lines.append(f"  symbolic branch at exponent {s.exponent}: "
                     f"coefficients {[str(c) for c in s.poly]}")
    if not (report.points or report.components):
        lines.append("  empty")
    _emit(config, payload, "\n".join(lines))
    return 0


def cmd_mc_check(args, config: RunConfig) -> int:
    if args.model:
        bundle = load_model(args.model)
        if args.path is None:
            raise ParseError("name the disc-data file inside the bundle")
        data = bundle.discs(args.path, args.params)
    else:
        path = _resolve_path(args)
        data = disc_data_from_json(_load_json_file(path), source=str(path))
    components = m0_deformed(data.m0, data.deformation,
                             energy=config.energy, degree=config.degree)
    outcome = classify_obstruction(components)
    payload = {"command": "mc-check", "classification": outcome.kind}
    lines = [f"curvature classification: {outcome.kind}"]
    if outcome.kind == ObstructionKind.WEAKLY:
        payload["potential"] = series_to_json(outcome.potential)
        lines.append(f"  potential: {outcome.potential}")
    elif outcome.kind == ObstructionKind.OBSTRUCTED:
        payload["offender"] = outcome.offender.name
        payload["residue"] = str(outcome.residue)
        lines.append(f"  obstruction at {outcome.offender.name}: {outcome.residue}")
    _emit(config, payload, "\n".join(lines))
    return 0


def cmd_transport(args, config: RunConfig) -> int:
    atlas = _load_atlas(args, config)
    transition = atlas.transition(args.transition)
    point = _parse_point(args.point)
    try:
        report = transport_point(point, transition)
    except OutsideOverlap as exc:
        payload = {"command": "transport", "ok": False, "error": str(exc)}
        _emit(config, payload, f"outside overlap: {exc}")
        return 1
    payload = {
        "command": "transport",
        "ok": True,
        "transition": report.transition,
        "coordinates": {v: scalar_to_json(s) for v, s in report.coordinates},
        "source_regime": report.source_regime,
        "target_regime": report.target_regime,
    }
    lines = [f"transport through {report.transition}:"]
    for v, s in report.coordinates:
        lines.append(f"  {v} = {s}")
    lines.append(f"  regimes: source {report.source_regime}, "
                 f"target {report.target_regime}")
    _emit(config, payload, "\n".join(lines))
    return 0


def cmd_feasible(args, config: RunConfig) -> int:
    if args.model:
        bundle = load_model(args.model)
        if args.path is None:
            raise ParseError("name the constraint file inside the bundle")
        variables, constraints = bundle.constraints(args.path, args.params)
        domains = (Domain(tuple(constraints)),)
    else:
        path = _resolve_path(args)
        obj = _load_json_file(path)
        if isinstance(obj, dict) and "constraints" in obj:
            variables = [str(v) for v in obj.get("variables", [])]
            domains = domains_from_json(obj["constraints"])
        else:
            variables = []
            domains = domains_from_json(obj if obj else [])
    result = feasible(domains, variables=variables)
    payload = {"command": "feasible", "feasible": result.feasible}
    if result.feasible:
        payload["witness"] = {v: str(q) for v, q in sorted(result.witness.items())}
        text = "feasible\n" + "\n".join(
            f"  val({v}) = {q}" for v, q in sorted(result.witness.items()))
    else:
        payload["certificate"] = list(result.certificate)
        text = "infeasible\n" + "\n".join(
            f"  {label}" for label in result.certificate)
    _emit(config, payload, text)
    return 0 if result.feasible else 1


# ---- entry point ----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="novatlas",
        description="Exact validation of chart gluings, curvature data and "
                    "critical loci over Novikov series.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, path_help: str):
        p.add_argument("path", nargs="?", help=path_help)
        p.add_argument("--model", help="use a bundled model "
                                       f"({', '.join(MODEL_DIRS)})")
        p.add_argument("--params", default="default",
                       help="parameterization name for --model (default: default)")
        p.add_argument("--energy", help="energy cutoff as an exact rational "
                                        f"(default 5; env {ENV_ENERGY})")
        p.add_argument("--degree", type=int,
                       help=f"total-degree cutoff (default 8; env {ENV_DEGREE})")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("validate",
                       help="check potential matching on every transition and "
                            "every declared cocycle loop")
    common(p, "atlas JSON file")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("critical", help="critical locus of one chart")
    common(p, "atlas JSON file")
    p.add_argument("chart", help="chart name")
    p.set_defaults(handler=cmd_critical)

    p = sub.add_parser("mc-check",
                       help="classify curvature from disc-contribution data")
    common(p, "disc-data JSON file")
    p.set_defaults(handler=cmd_mc_check)

    p = sub.add_parser("transport",
                       help="push a point through a transition "
                            "(prefix the id with ~ for the declared inverse)")
    common(p, "atlas JSON file")
    p.add_argument("transition", help="transition id")
    p.add_argument("--point", required=True,
                   help="point literal, e.g. \"u=T^{1/2},v=T^{1/2}\"")
    p.set_defaults(handler=cmd_transport)

    p = sub.add_parser("feasible",
                       help="exact feasibility of valuation constraints")
    common(p, "constraint JSON file")
    p.set_defaults(handler=cmd_feasible)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.from_args(args)
        return args.handler(args, config)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (UnknownModel, UnknownChart, UnknownTransition,
            UnsupportedPotential) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NovatlasError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
