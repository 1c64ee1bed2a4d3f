"""Exception hierarchy shared by every module of the toolkit."""

from __future__ import annotations


class NovatlasError(Exception):
    """Base class for all errors raised by this package."""


class ZeroNotInvertible(NovatlasError, ZeroDivisionError):
    """Attempt to invert the zero scalar."""


class InfiniteCutoff(NovatlasError):
    """An operation needs a finite truncation energy but none was set."""


class CutoffUnderflow(NovatlasError, ValueError):
    """A truncation energy fell to zero or below, leaving no reliable window."""


class VariableMismatch(NovatlasError):
    """Series operands live over different variable sets, or a substitution
    misses a variable that actually occurs."""


class NonInvertibleSeries(NovatlasError):
    """A series has no inverse under the supported shapes (single monomial,
    or invertible constant term with a convergent tail)."""


class NonInvertibleSubstitution(NonInvertibleSeries):
    """A negative power met a non-invertible assignment during substitution."""


class DivergentEvaluation(NovatlasError):
    """Evaluation cannot be certified: a degree-truncated direction received
    a value of valuation zero (or the dropped terms defeat certification)."""


class DivisionByZero(NovatlasError, ZeroDivisionError):
    """Evaluation of a negative power at the zero scalar."""


class ChartMismatch(NovatlasError):
    """Transition endpoints do not line up for composition."""


class OutsideOverlap(NovatlasError):
    """A point violates the overlap domain of a transition."""

    def __init__(self, message: str, constraint: object | None = None):
        super().__init__(message)
        self.constraint = constraint


class UnknownChart(NovatlasError):
    """A chart name does not exist in the atlas."""


class UnknownTransition(NovatlasError):
    """A transition id does not exist in the atlas."""


class UnknownModel(NovatlasError):
    """No bundled model of that name."""


class ParseError(NovatlasError):
    """Malformed input file, with a location when one is known."""

    def __init__(self, message: str, *, source: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.source = source
        self.line = line
        self.column = column
        place = ""
        if source is not None:
            place = str(source)
        if line is not None:
            place += f":{line}"
            if column is not None:
                place += f":{column}"
        super().__init__(f"{place}: {message}" if place else message)


class NoRoots(NovatlasError):
    """The Newton polygon is a single vertex: no leading solutions exist."""


class SingularJacobian(NovatlasError):
    """The leading-order Jacobian is not invertible; the branch is degenerate."""


class LiftDidNotConverge(NovatlasError):
    """Iterative refinement failed to certify the requested residual energy."""


class UnsupportedPotential(NovatlasError):
    """The potential falls outside the supported shapes (univariate Laurent,
    pure monomial, constant, or seeded multivariate)."""


class NotSolvable(NovatlasError):
    """A cocycle equation is not affine in its unknown, or the coefficient of
    the unknown is not invertible."""
