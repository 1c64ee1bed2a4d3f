"""Exact-arithmetic toolkit for formal deformation charts over Novikov series.

Core layers:

- :mod:`novatlas.novikov`: truncated exact scalars, valuations, ring classes.
- :mod:`novatlas.multiseries`: Laurent series carriers for potentials and maps.
- :mod:`novatlas.constraints` / :mod:`novatlas.atlas`: valuation domains,
  chart gluing validation, cocycle loops, point transport, feasibility.
- :mod:`novatlas.mc`: deformed operations from disc-contribution data.
- :mod:`novatlas.crit`: Newton-polygon leading solutions and Hensel lifting.
- :mod:`novatlas.models`: bundled worked models with expected-result manifests.
- :mod:`novatlas.cli`: the ``novatlas`` command.
"""

from .novikov import (
    NovikovScalar,
    RingClass,
    classify,
    constant,
    monomial,
    parse_scalar,
    scalar,
)
from .multiseries import Monomial, MultiSeries
from .constraints import Domain, ValuationConstraint, feasible
from .atlas import Atlas, Chart, Transition, check_potential_match, compose, \
    transport_point, verify_cocycle
from .mc import (
    Classification,
    DeformationData,
    DiscContribution,
    Generator,
    HolonomyFactor,
    classify_obstruction,
    m0_deformed,
    m1_between,
    solve_cocycle,
)
from .crit import CritConfig, critical_locus, hensel_lift, newton_leading

__version__ = "0.1.0"

__all__ = [
    "Atlas",
    "Chart",
    "Classification",
    "CritConfig",
    "DeformationData",
    "DiscContribution",
    "Domain",
    "Generator",
    "HolonomyFactor",
    "Monomial",
    "MultiSeries",
    "NovikovScalar",
    "RingClass",
    "Transition",
    "ValuationConstraint",
    "check_potential_match",
    "classify",
    "classify_obstruction",
    "compose",
    "constant",
    "critical_locus",
    "feasible",
    "hensel_lift",
    "m0_deformed",
    "m1_between",
    "monomial",
    "newton_leading",
    "parse_scalar",
    "scalar",
    "solve_cocycle",
    "transport_point",
    "verify_cocycle",
    "__version__",
]
