"""Upper limit on wall conductivity from absorption outpacing photon creation.

Absorption per unit time is 1 - R**f with the good-conductor reflectivity
R = 1 - 2 sqrt(2 omega eps0 / sigma).  Linearising 1 - R**f ~ f (1 - R)
and requiring it to exceed the creation rate gives a closed-form ceiling on
sigma.  The ceiling is computed entirely in log10, since the relaxation
factors reach exp(1e8) for physical inputs.

When the noise rate is ``SELF_CONSISTENT`` it depends on sigma itself
(lambda = 3(1-R(sigma))c/(2L)), and :func:`self_consistent_bound` solves
sigma = bound(lambda(sigma)) by bisection on log10 sigma.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    MaxIterations,
    NoFixedPoint,
    NonPhysicalParams,
    NonPositiveInput,
    NonPositiveLength,
    ReflectivityOutOfRange,
    UnknownParameter,
    UnresolvedRate,
)
from .logdomain import LN10, LogNumber
from .noise import relaxation_length, relaxation_rate, relaxation_rate_from_deficit, scenario_variance
from .photons import rate_bracket, total_creation_rate
from .scenario import ScenarioConfig

GENERAL = "GENERAL"
FAST_RELAXATION = "FAST_RELAXATION"
SLOW_RELAXATION = "SLOW_RELAXATION"

REGIME_NAMES = {"general": GENERAL, "fast": FAST_RELAXATION, "slow": SLOW_RELAXATION}
AUTO_FAST_RATIO = 10.0
AUTO_SLOW_RATIO = 0.1


def reflectivity(omega: float, sigma_c: float, eps0: float) -> float:
    """R = 1 - 2 sqrt(2 omega eps0 / sigma), clamped at 0 for poor conductors."""
    return 1.0 - reflectivity_deficit(omega, sigma_c, eps0)


def reflectivity_deficit(omega: float, sigma_c: float, eps0: float) -> float:
    """1 - R, computed without cancellation (R itself rounds to 1.0 for sigma > ~1e35)."""
    if not (omega > 0 and sigma_c > 0):
        raise NonPositiveInput(f"omega and sigma must be > 0, got {omega!r}, {sigma_c!r}")
    return min(1.0, 2.0 * math.sqrt(2.0 * omega * eps0 / sigma_c))


def log10_reflectivity_deficit(omega: float, log10_sigma: float, eps0: float) -> float:
    raw = math.log10(2.0) + 0.5 * (math.log10(2.0 * omega * eps0) - log10_sigma)
    return min(0.0, raw)


def absorption_rate(R: float, c: float, l: float) -> float:
    """1 - R**f with f = c / l folding times per unit time."""
    if not 0.0 <= R <= 1.0:
        raise ReflectivityOutOfRange(f"reflectivity must lie in [0, 1], got {R!r}")
    if not l > 0:
        raise NonPositiveLength(f"folding length must be > 0, got {l!r}")
    if R == 0.0:
        return 1.0
    return 10.0 ** log10_absorption(math.log10(1.0 - R) if R < 1.0 else -math.inf, c / l)


def log10_absorption(log10_deficit: float, f: float) -> float:
    """log10(1 - (1 - d)**f) given log10 d."""
    if log10_deficit == -math.inf:
        return -math.inf
    if log10_deficit >= 0.0:
        return 0.0
    if log10_deficit > -300.0:
        d = 10.0**log10_deficit
        return math.log10(-math.expm1(f * math.log1p(-d)))
    # d below double range: 1 - (1-d)^f = f d to relative O(f d)
    return math.log10(f) + log10_deficit


def noise_rate_for(scenario: ScenarioConfig, conductivity: float | None = None) -> float:
    """Numeric lambda for a scenario, resolving SELF_CONSISTENT when possible."""
    if not scenario.self_consistent:
        return scenario.numeric_rate
    length = relaxation_length(scenario)
    c = scenario.constants.light_speed
    if scenario.wall_reflectivity is not None:
        return relaxation_rate(scenario.wall_reflectivity, length, c)
    if conductivity is not None:
        return rate_at_log10_conductivity(scenario, math.log10(conductivity))
    raise UnresolvedRate("noise_rate is SELF_CONSISTENT; give wall_reflectivity or a conductivity")


def rate_at_log10_conductivity(scenario: ScenarioConfig, log10_sigma: float) -> float:
    d = 10.0 ** log10_reflectivity_deficit(
        scenario.mode_angular_frequency, log10_sigma, scenario.constants.vacuum_permittivity
    )
    return relaxation_rate_from_deficit(d, relaxation_length(scenario), scenario.constants.light_speed)


@dataclass
class BoundResult:
    log10_sigma_limit: float
    regime: str
    inputs: dict
    overflow_flags: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    fixed_point_trace: dict | None = None

    def to_json(self) -> dict:
        out = {
            "inputs": self.inputs,
            "regime": self.regime,
            "log10_sigma_limit": self.log10_sigma_limit,
            "overflow_flags": self.overflow_flags,
            "warnings": self.warnings,
        }
        if self.fixed_point_trace is not None:
            out["fixed_point_trace"] = self.fixed_point_trace
        return out


def _echo(scenario: ScenarioConfig, lam: float, t1: float, variance: float) -> dict:
    k = scenario.constants
    return {
        "omega": scenario.mode_angular_frequency,
        "vacuum_permittivity": k.vacuum_permittivity,
        "light_speed": k.light_speed,
        "folding_length": scenario.folding_length,
        "folding_frequency": scenario.folding_frequency,
        "duration_t1": t1,
        "final_position_x0": scenario.motion.final_position,
        "plate_mass": scenario.plate.mass,
        "plate_area": scenario.plate.area,
        "s": scenario.plate.s,
        "gamma": scenario.plate.gamma,
        "lambda": lam,
        "pressure_variance": variance,
        "temperature": scenario.thermal.temperature,
        "volume": scenario.geometry.volume,
        "lx": scenario.geometry.lx,
        "units": scenario.units,
    }


def _assemble(scenario, bracket: LogNumber, regime, lam, t1, notes) -> BoundResult:
    k = scenario.constants
    variance = scenario_variance(scenario)
    x0, s = scenario.motion.final_position, scenario.plate.s
    flags = {
        "bracket_log10": bracket.log10,
        "bracket_exceeds_double": bracket.log10 > 308.0,
        "unbounded": variance == 0.0 or s == 0.0,
    }
    if flags["unbounded"]:
        log10_limit = math.inf
    else:
        inner = (
            0.5 * math.log10(8.0 * scenario.mode_angular_frequency * k.vacuum_permittivity)
            + math.log10(scenario.folding_frequency)
            + math.log10(t1)
            + 4.0 * math.log10(k.light_speed)
            + 4.0 * math.log10(math.pi)
            - math.log10(2.0)
            - 2.0 * math.log10(x0)
            - 2.0 * math.log10(s)
            - math.log10(variance)
            - bracket.log10
        )
        log10_limit = 2.0 * inner
    flags["limit_exceeds_double"] = abs(log10_limit) > 308.0
    for note in notes:
        warnings.warn(note, stacklevel=3)
    return BoundResult(log10_limit, regime, _echo(scenario, lam, t1, variance), flags, list(notes))


def _resolve(scenario, rate, t1):
    t1 = scenario.motion.duration if t1 is None else t1
    lam = noise_rate_for(scenario) if rate is None else rate
    if not lam >= 0:
        raise NonPhysicalParams(f"noise rate must be >= 0, got {lam!r}")
    return scenario.plate.gamma, lam, t1


def bound_general(scenario: ScenarioConfig, rate: float | None = None,
                  t1: float | None = None) -> BoundResult:
    gamma, lam, t1 = _resolve(scenario, rate, t1)
    return _assemble(scenario, rate_bracket(gamma, lam, t1), GENERAL, lam, t1, [])


def fast_bracket(gamma: float, lam: float, t1: float) -> LogNumber:
    """gamma^2/lambda^2 e^{lambda t1} + 5/4."""
    if gamma == 0.0:
        return LogNumber.from_float(1.25)
    if lam == 0.0:
        raise NonPhysicalParams("fast-relaxation bracket needs lambda > 0")
    lead = LogNumber(1, 2.0 * (math.log10(gamma) - math.log10(lam)) + lam * t1 / LN10)
    return lead + 1.25


def bound_fast_relaxation(scenario: ScenarioConfig, rate: float | None = None,
                          t1: float | None = None) -> BoundResult:
    """Ceiling in the lambda >> gamma limit (warns if lambda <= gamma)."""
    gamma, lam, t1 = _resolve(scenario, rate, t1)
    notes = [] if lam > gamma else [f"fast-relaxation form used with lambda={lam:.6g} <= gamma={gamma:.6g}"]
    return _assemble(scenario, fast_bracket(gamma, lam, t1), FAST_RELAXATION, lam, t1, notes)


def bound_slow_relaxation(scenario: ScenarioConfig, rate: float | None = None,
                          t1: float | None = None) -> BoundResult:
    """Ceiling in the lambda << gamma limit, where the bracket tends to 9/4."""
    gamma, lam, t1 = _resolve(scenario, rate, t1)
    notes = [] if lam < gamma else [f"slow-relaxation form used with lambda={lam:.6g} >= gamma={gamma:.6g}"]
    return _assemble(scenario, LogNumber.from_float(9.0 / 4.0), SLOW_RELAXATION, lam, t1, notes)


_BOUNDS = {
    GENERAL: bound_general,
    FAST_RELAXATION: bound_fast_relaxation,
    SLOW_RELAXATION: bound_slow_relaxation,
}


def select_regime(gamma: float, lam: float) -> str:
    if gamma == 0.0:
        return FAST_RELAXATION if lam > 0 else GENERAL
    ratio = lam / gamma
    if ratio > AUTO_FAST_RATIO:
        return FAST_RELAXATION
    if ratio < AUTO_SLOW_RATIO:
        return SLOW_RELAXATION
    return GENERAL


def _regime_key(regime: str) -> str:
    key = regime.lower()
    if key == "auto":
        return key
    if key in REGIME_NAMES:
        return REGIME_NAMES[key]
    if regime in _BOUNDS:
        return regime
    raise UnknownParameter(f"unknown regime {regime!r}; choose general, fast, slow or auto")


def conductivity_bound(scenario: ScenarioConfig, regime: str = "general",
                       rate: float | None = None, t1: float | None = None) -> BoundResult:
    """Dispatch on regime: general | fast | slow | auto (by lambda/gamma, thresholds 10 and 0.1)."""
    key = _regime_key(regime)
    if key == "auto":
        gamma, lam, _ = _resolve(scenario, rate, t1)
        key = select_regime(gamma, lam)
    return _BOUNDS[key](scenario, rate=rate, t1=t1)


# ---------------------------------------------------------------------------
# self-consistent solve

@dataclass
class FixedPoint:
    log10_sigma: float
    crossings: list
    samples: list
    iterations: int


def solve_fixed_point(
    log10_bound: Callable[[float], float],
    lo: float = -10.0,
    hi: float = 300.0,
    grid_points: int = 311,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> FixedPoint:
    """Find u with log10_bound(u) = u on [lo, hi].

    The residual is sampled on a uniform grid; every sign change is refined by
    bisection.  The returned root is the largest downward crossing, i.e. the
    top edge of the set where sigma <= bound(sigma) holds.
    """
    grid = np.linspace(lo, hi, grid_points)
    samples = []
    for u in grid:
        b = log10_bound(float(u))
        samples.append((float(u), b, b - float(u)))
    crossings = []
    for (u0, _, g0), (u1, _, g1) in zip(samples, samples[1:]):
        if g0 == 0.0:
            crossings.append({"log10_sigma": u0, "direction": "touch", "iterations": 0})
            continue
        if g0 * g1 >= 0:
            continue
        a, b, ga = u0, u1, g0
        for it in range(1, max_iter + 1):
            mid = 0.5 * (a + b)
            gm = log10_bound(mid) - mid
            if gm == 0.0 or (b - a) < tol:
                break
            if (gm > 0) == (ga > 0):
                a, ga = mid, gm
            else:
                b = mid
        else:
            raise MaxIterations(f"bisection did not reach tol={tol} in {max_iter} steps")
        crossings.append({
            "log10_sigma": 0.5 * (a + b),
            "direction": "down" if g0 > 0 else "up",
            "iterations": it,
        })
    if samples[-1][2] == 0.0:
        crossings.append({"log10_sigma": samples[-1][0], "direction": "touch", "iterations": 0})
    if not crossings:
        raise NoFixedPoint(
            f"bound never crosses sigma on log10 sigma in [{lo}, {hi}]", samples=samples
        )
    down = [c for c in crossings if c["direction"] != "up"] or crossings
    chosen = max(down, key=lambda c: c["log10_sigma"])
    return FixedPoint(chosen["log10_sigma"], crossings, samples, sum(c["iterations"] for c in crossings))


def self_consistent_bound(scenario: ScenarioConfig, regime: str = "general",
                          lo: float = -10.0, hi: float = 300.0, **solver) -> BoundResult:
    """Bound with lambda tied to the conductivity being bounded.

    A fixed ``wall_reflectivity`` decouples lambda from sigma, so no iteration
    is needed.
    """
    key = _regime_key(regime)
    if not scenario.self_consistent or scenario.wall_reflectivity is not None:
        result = conductivity_bound(scenario, key)
        result.fixed_point_trace = {"decoupled": True, "iterations": 0, "crossings": []}
        return result

    if key == "auto":
        key = GENERAL
    fn = _BOUNDS[key]

    def log10_bound(u: float) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return fn(scenario, rate=rate_at_log10_conductivity(scenario, u)).log10_sigma_limit

    fp = solve_fixed_point(log10_bound, lo, hi, **solver)
    lam = rate_at_log10_conductivity(scenario, fp.log10_sigma)
    result = fn(scenario, rate=lam)
    result.fixed_point_trace = {
        "decoupled": False,
        "log10_sigma_fixed_point": fp.log10_sigma,
        "lambda_at_fixed_point": lam,
        "reflectivity_clamped": log10_reflectivity_deficit(
            scenario.mode_angular_frequency, fp.log10_sigma, scenario.constants.vacuum_permittivity
        ) == 0.0,
        "crossings": fp.crossings,
        "iterations": fp.iterations,
        "bracket": [lo, hi],
        "samples": [{"log10_sigma": u, "log10_bound": b} for u, b, _ in fp.samples],
    }
    return result


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SecondLawVerdict:
    absorption: float
    creation: float
    log10_absorption: float
    log10_creation: float
    satisfied: bool
    rate: float
    reflectivity_clamped: bool = False

    @property
    def margin_log10(self) -> float:
        return self.log10_absorption - self.log10_creation


def second_law_check(scenario: ScenarioConfig, sigma_c: float, rate: float | None = None,
                     t1: float | None = None) -> SecondLawVerdict:
    """Compare absorption 1 - R^f against the closed-form creation rate, in log10."""
    if not sigma_c > 0:
        raise NonPositiveInput(f"conductivity must be > 0, got {sigma_c!r}")
    lam = noise_rate_for(scenario, conductivity=sigma_c) if rate is None else rate
    log_d = log10_reflectivity_deficit(
        scenario.mode_angular_frequency, math.log10(sigma_c), scenario.constants.vacuum_permittivity
    )
    log_abs = log10_absorption(log_d, scenario.folding_frequency)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        creation = total_creation_rate(scenario, t1=t1, rate=lam)
    log_cre = creation.log10_total
    return SecondLawVerdict(
        absorption=10.0**log_abs if log_abs > -308 else 0.0,
        creation=creation.total,
        log10_absorption=log_abs,
        log10_creation=log_cre,
        satisfied=log_abs >= log_cre,
        rate=lam,
        reflectivity_clamped=log_d == 0.0,
    )


# ---------------------------------------------------------------------------
# sweeps

SWEEP_KEYS = {
    "T": "temperature",
    "V": "ly",
    "gamma": "plate_gamma",
    "lambda": "noise_rate",
    "t1": "duration",
    "x0": "final_position",
    "omega": "mode_angular_frequency",
    "l": "folding_length",
}


def scenario_with(scenario: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    """Copy of a scenario with one sweepable parameter set.

    ``V`` is realised by rescaling ``ly`` (lx and lz fixed).
    """
    if param not in SWEEP_KEYS:
        raise UnknownParameter(f"cannot sweep {param!r}; choose from {sorted(SWEEP_KEYS)}")
    raw = dict(scenario.source)
    if param == "V":
        g = scenario.geometry
        raw["ly"] = value / (g.lx * g.lz)
        if "plate_area" not in raw:
            raw["plate_area"] = scenario.plate.area
    elif param == "gamma":
        raw.pop("plate_friction", None)
        raw["plate_gamma"] = value
    else:
        raw[SWEEP_KEYS[param]] = value
    return scenario.replace(**raw)


def sweep_bound(scenario: ScenarioConfig, param: str, values, regime: str = "general",
                self_consistent: bool = False) -> list[tuple[float, BoundResult]]:
    rows = []
    for value in values:
        point = scenario_with(scenario, param, float(value))
        if self_consistent:
            result = self_consistent_bound(point, regime)
        else:
            result = conductivity_bound(point, regime)
        rows.append((float(value), result))
    return rows
