"""Exception hierarchy shared by every module."""
from __future__ import annotations


class DCEError(Exception):
    """Base class for all errors raised by this package."""


# -- configuration / input validation ---------------------------------------

class ScenarioError(DCEError, ValueError):
    pass


class NonPositiveDimension(ScenarioError):
    pass


class NegativeTemperature(ScenarioError):
    pass


class InvalidMotionProfile(ScenarioError):
    pass


class InvalidRunControls(ScenarioError):
    pass


class NonPositiveVolume(ScenarioError):
    pass


class NonPhysicalParams(ScenarioError):
    pass


class ConfigError(ScenarioError):
    """Aggregate of every violated invariant found while validating a scenario."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"{type(v).__name__}: {v}" for v in self.violations]
        super().__init__("invalid scenario:\n  " + "\n  ".join(lines))

    @property
    def codes(self) -> list[str]:
        return [type(v).__name__ for v in self.violations]


class UnresolvedRate(ScenarioError):
    """The noise rate is SELF_CONSISTENT and nothing was supplied to resolve it."""


class ReflectivityOutOfRange(DCEError, ValueError):
    pass


class ZeroAbsorptivity(DCEError, ValueError):
    pass


class InvalidStep(DCEError, ValueError):
    pass


class EmptyPath(DCEError, ValueError):
    pass


class NonPositiveInput(DCEError, ValueError):
    pass


class NonPositiveLength(DCEError, ValueError):
    pass


class TruncationTooSmall(DCEError, ValueError):
    pass


class InvalidSpec(DCEError, ValueError):
    pass


class LagOutOfRange(DCEError, ValueError):
    pass


class GridMismatch(DCEError, ValueError):
    pass


class UnknownParameter(DCEError, ValueError):
    pass


class DegenerateRates(DCEError, ValueError):
    """gamma and lambda coincide; the closed form divides by gamma**2 - lambda**2."""


# -- numeric failures (CLI exit status 3) -------------------------------------

class NumericFailure(DCEError, ArithmeticError):
    pass


class QuadratureFailure(NumericFailure):
    pass


class NoFixedPoint(NumericFailure):
    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples or []


class MaxIterations(NumericFailure):
    pass
