"""Physical constants, cavity/plate parameters and validated scenario configuration.

A scenario is read from a flat ``key = value`` text file (``#`` comments,
SI units).  :func:`validate_scenario` turns the raw key/value mapping into
an immutable :class:`ScenarioConfig`, collecting *every* violated invariant
into a single :class:`~dcebound.errors.ConfigError`.

Setting ``units = natural`` replaces every physical constant by 1 (including
the radiation constant alpha, which is then no longer 4*sigma/c).  This keeps
Monte Carlo checks at O(1) magnitudes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .errors import (
    ConfigError,
    InvalidMotionProfile,
    InvalidRunControls,
    NegativeTemperature,
    NonPhysicalParams,
    NonPositiveDimension,
    ScenarioError,
    UnresolvedRate,
)

SELF_CONSISTENT = "SELF_CONSISTENT"


@dataclass(frozen=True)
class PhysicalConstants:
    stefan_boltzmann: float
    boltzmann: float
    light_speed: float
    vacuum_permittivity: float
    radiation_constant_alpha: float
    # only needed for the Planck occupancy of a mode
    reduced_planck: float = 1.054571817e-34

    def __post_init__(self):
        for name, value in vars(self).items():
            if not value > 0:
                raise NonPhysicalParams(f"constant {name} must be > 0, got {value!r}")


def default_constants() -> PhysicalConstants:
    """CODATA 2018 values, with alpha = 4 sigma / c."""
    sigma = 5.670374419e-8
    c = 2.99792458e8
    return PhysicalConstants(
        stefan_boltzmann=sigma,
        boltzmann=1.380649e-23,
        light_speed=c,
        vacuum_permittivity=8.8541878128e-12,
        radiation_constant_alpha=4.0 * sigma / c,
        reduced_planck=1.054571817e-34,
    )


def natural_constants() -> PhysicalConstants:
    return PhysicalConstants(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)


@dataclass(frozen=True)
class CavityGeometry:
    lx: float
    ly: float
    lz: float

    @property
    def volume(self) -> float:
        return self.lx * self.ly * self.lz

    @property
    def half_length(self) -> float:
        return self.lx / 2.0

    @property
    def total_surface(self) -> float:
        return 2.0 * (self.lx * self.ly + self.ly * self.lz + self.lz * self.lx)


@dataclass(frozen=True)
class PlateParams:
    mass: float
    area: float
    thickness: float
    friction: float
    gamma: float  # friction / mass

    @property
    def s(self) -> float:
        return self.area / self.mass


@dataclass(frozen=True)
class ThermalState:
    temperature: float
    wall_temperature: float


@dataclass(frozen=True)
class MotionProfile:
    rest_position: float  # L = lx / 2
    final_position: float  # x0
    duration: float  # t1


@dataclass(frozen=True)
class ScenarioConfig:
    constants: PhysicalConstants
    geometry: CavityGeometry
    plate: PlateParams
    thermal: ThermalState
    motion: MotionProfile
    noise_rate: float | str
    mode_angular_frequency: float
    folding_length: float
    initial_velocity: float = 0.0
    noise_variance: float | None = None  # overrides the blackbody value when set
    wall_reflectivity: float | None = None
    relaxation_length: str = "lx"
    occupancy: float | str = "planck"
    n_max: int = 64
    dt: float = 0.01
    n_steps: int = 1000
    ensemble_size: int = 1
    seed: int = 0
    units: str = "si"
    source: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    @property
    def self_consistent(self) -> bool:
        return self.noise_rate == SELF_CONSISTENT

    @property
    def numeric_rate(self) -> float:
        if isinstance(self.noise_rate, str):
            raise UnresolvedRate(
                "noise_rate is SELF_CONSISTENT; resolve it with dcebound.bound.noise_rate_for()"
            )
        return self.noise_rate

    @property
    def folding_frequency(self) -> float:
        """f = c / l, reflections per unit time."""
        return self.constants.light_speed / self.folding_length

    def replace(self, **changes) -> "ScenarioConfig":
        """Re-validate with some raw config keys replaced."""
        raw = dict(self.source)
        raw.update(changes)
        return validate_scenario(raw)


# ---------------------------------------------------------------------------
# raw key/value handling

_CONSTANT_KEYS = {
    "stefan_boltzmann": "stefan_boltzmann",
    "boltzmann": "boltzmann",
    "light_speed": "light_speed",
    "vacuum_permittivity": "vacuum_permittivity",
    "radiation_constant": "radiation_constant_alpha",
    "reduced_planck": "reduced_planck",
}

KNOWN_KEYS = frozenset(
    {
        "units",
        *_CONSTANT_KEYS,
        "lx",
        "ly",
        "lz",
        "plate_mass",
        "plate_area",
        "plate_thickness",
        "plate_friction",
        "plate_gamma",
        "temperature",
        "wall_temperature",
        "final_position",
        "duration",
        "noise_rate",
        "noise_variance",
        "wall_reflectivity",
        "relaxation_length",
        "mode_angular_frequency",
        "folding_length",
        "initial_velocity",
        "occupancy",
        "n_max",
        "dt",
        "n_steps",
        "ensemble_size",
        "seed",
    }
)


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines.  Unknown or duplicate keys are errors."""
    raw: dict[str, str] = {}
    problems = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(ScenarioError(f"line {lineno}: expected 'key = value', got {line!r}"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            problems.append(ScenarioError(f"line {lineno}: unknown key {key!r}"))
        elif key in raw:
            problems.append(ScenarioError(f"line {lineno}: duplicate key {key!r}"))
        else:
            raw[key] = value
    if problems:
        raise ConfigError(problems)
    return raw


def load_config(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text(encoding="utf-8")
    return validate_scenario(parse_config_text(text))


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialise the raw fields a scenario was built from (floats via repr, so exact)."""
    lines = []
    for key in sorted(cfg.source):
        value = cfg.source[key]
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


class _Collector:
    def __init__(self, raw: Mapping[str, Any]):
        self.raw = raw
        self.violations: list[ScenarioError] = []
        unknown = sorted(set(raw) - KNOWN_KEYS)
        for key in unknown:
            self.violations.append(ScenarioError(f"unknown key {key!r}"))

    def number(self, key, default=None, *, required=False, kind=float):
        if key not in self.raw or self.raw[key] is None:
            if required:
                self.violations.append(ScenarioError(f"missing required key {key!r}"))
                return math.nan
            return default
        value = self.raw[key]
        try:
            if kind is int:
                out = int(value) if not isinstance(value, float) else _exact_int(value)
            else:
                out = float(value)
        except (TypeError, ValueError):
            self.violations.append(ScenarioError(f"{key}: cannot parse {value!r} as {kind.__name__}"))
            return math.nan if kind is float else 0
        if kind is float and not math.isfinite(out):
            self.violations.append(ScenarioError(f"{key}: must be finite, got {value!r}"))
        return out

    def fail(self, exc_type, message):
        self.violations.append(exc_type(message))


def _exact_int(value: float) -> int:
    if value != int(value):
        raise ValueError(value)
    return int(value)


def validate_scenario(raw: Mapping[str, Any]) -> ScenarioConfig:
    """Build a :class:`ScenarioConfig` from raw key/value fields.

    Values may be strings (as read from a config file) or numbers.  Defaults:
    plate area ``ly*lz``, final position ``lx/4``, mode frequency ``pi*c/lx``,
    folding length ``lx``, wall temperature equal to ``temperature``.

    Raises
    ------
    ConfigError
        listing every violated invariant (``.violations`` holds instances of
        NonPositiveDimension, NegativeTemperature, InvalidMotionProfile,
        InvalidRunControls, ...).
    """
    col = _Collector(raw)
    get = col.number

    units = str(raw.get("units", "si")).strip().lower()
    if units not in ("si", "natural"):
        col.fail(ScenarioError, f"units must be 'si' or 'natural', got {units!r}")
        units = "si"
    base = natural_constants() if units == "natural" else default_constants()
    const_values = vars(base).copy()
    for key, attr in _CONSTANT_KEYS.items():
        const_values[attr] = get(key, const_values[attr])
    if "radiation_constant" not in raw and units == "si":
        const_values["radiation_constant_alpha"] = (
            4.0 * const_values["stefan_boltzmann"] / const_values["light_speed"]
        )
    constants = None
    try:
        constants = PhysicalConstants(**const_values)
    except NonPhysicalParams as exc:
        col.violations.append(exc)

    lx = get("lx", required=True)
    ly = get("ly", required=True)
    lz = get("lz", required=True)
    for name, value in (("lx", lx), ("ly", ly), ("lz", lz)):
        if not value > 0:
            col.fail(NonPositiveDimension, f"{name} must be > 0, got {value!r}")
    geometry = CavityGeometry(lx, ly, lz)
    dims_ok = all(v > 0 for v in (lx, ly, lz))

    mass = get("plate_mass", required=True)
    area = get("plate_area", ly * lz if dims_ok else math.nan)
    thickness = get("plate_thickness", 0.0)
    if not mass > 0:
        col.fail(NonPositiveDimension, f"plate_mass must be > 0, got {mass!r}")
    if not area > 0:
        col.fail(NonPositiveDimension, f"plate_area must be > 0, got {area!r}")
    if not thickness >= 0:
        col.fail(NonPositiveDimension, f"plate_thickness must be >= 0, got {thickness!r}")
    if "plate_friction" in raw and "plate_gamma" in raw:
        col.fail(ScenarioError, "give plate_friction or plate_gamma, not both")
    if "plate_gamma" in raw:
        gamma = get("plate_gamma")
        friction = gamma * mass
    else:
        friction = get("plate_friction", 0.0)
        gamma = friction / mass if mass > 0 else math.nan
    if not friction >= 0 or not gamma >= 0:
        col.fail(NonPhysicalParams, f"plate friction must be >= 0, got gamma={gamma!r}")
    plate = PlateParams(mass, area, thickness, friction, gamma)

    temperature = get("temperature", required=True)
    wall_temperature = get("wall_temperature", temperature)
    if not temperature >= 0:
        col.fail(NegativeTemperature, f"temperature must be >= 0, got {temperature!r}")
    if not wall_temperature >= 0:
        col.fail(NegativeTemperature, f"wall_temperature must be >= 0, got {wall_temperature!r}")
    thermal = ThermalState(temperature, wall_temperature)

    x0 = get("final_position", lx / 4.0)
    t1 = get("duration", required=True)
    if not (0.0 < x0 < lx):
        col.fail(InvalidMotionProfile, f"final_position must lie in (0, lx={lx!r}), got {x0!r}")
    if not t1 > 0:
        col.fail(InvalidMotionProfile, f"duration must be > 0, got {t1!r}")
    motion = MotionProfile(lx / 2.0, x0, t1)

    rate_raw = raw.get("noise_rate", SELF_CONSISTENT)
    if isinstance(rate_raw, str) and rate_raw.strip().upper() == SELF_CONSISTENT:
        noise_rate: float | str = SELF_CONSISTENT
    else:
        noise_rate = get("noise_rate")
        if not noise_rate >= 0:
            col.fail(NonPhysicalParams, f"noise_rate must be >= 0, got {noise_rate!r}")

    variance = get("noise_variance")
    if variance is not None and not variance >= 0:
        col.fail(NonPhysicalParams, f"noise_variance must be >= 0, got {variance!r}")
    reflect = get("wall_reflectivity")
    if reflect is not None and not 0.0 <= reflect <= 1.0:
        col.fail(NonPhysicalParams, f"wall_reflectivity must lie in [0, 1], got {reflect!r}")
    rel_len = str(raw.get("relaxation_length", "lx")).strip().lower()
    if rel_len not in ("lx", "half"):
        col.fail(ScenarioError, f"relaxation_length must be 'lx' or 'half', got {rel_len!r}")

    c = constants.light_speed if constants else math.nan
    omega = get("mode_angular_frequency", math.pi * c / lx if dims_ok else math.nan)
    if not omega > 0:
        col.fail(NonPhysicalParams, f"mode_angular_frequency must be > 0, got {omega!r}")
    fold = get("folding_length", lx)
    if not fold > 0:
        col.fail(NonPositiveDimension, f"folding_length must be > 0, got {fold!r}")
    v0 = get("initial_velocity", 0.0)

    occ_raw = raw.get("occupancy", "planck")
    if isinstance(occ_raw, str) and occ_raw.strip().lower() == "planck":
        occupancy: float | str = "planck"
    else:
        occupancy = get("occupancy")
        if not occupancy >= 0:
            col.fail(NonPhysicalParams, f"occupancy must be >= 0, got {occupancy!r}")

    n_max = get("n_max", 64, kind=int)
    dt = get("dt", 0.01)
    n_steps = get("n_steps", 1000, kind=int)
    ensemble_size = get("ensemble_size", 1, kind=int)
    seed = get("seed", 0, kind=int)
    if not dt > 0:
        col.fail(InvalidRunControls, f"dt must be > 0, got {dt!r}")
    if not n_steps >= 1:
        col.fail(InvalidRunControls, f"n_steps must be >= 1, got {n_steps!r}")
    if not ensemble_size >= 1:
        col.fail(InvalidRunControls, f"ensemble_size must be >= 1, got {ensemble_size!r}")
    if not n_max >= 2:
        col.fail(InvalidRunControls, f"n_max must be >= 2, got {n_max!r}")
    if seed < 0:
        col.fail(InvalidRunControls, f"seed must be >= 0, got {seed!r}")

    if col.violations:
        raise ConfigError(col.violations)

    source = {key: _normalise(raw[key]) for key in raw}
    return ScenarioConfig(
        constants=constants,
        geometry=geometry,
        plate=plate,
        thermal=thermal,
        motion=motion,
        noise_rate=noise_rate,
        mode_angular_frequency=omega,
        folding_length=fold,
        initial_velocity=v0,
        noise_variance=variance,
        wall_reflectivity=reflect,
        relaxation_length=rel_len,
        occupancy=occupancy,
        n_max=n_max,
        dt=dt,
        n_steps=n_steps,
        ensemble_size=ensemble_size,
        seed=seed,
        units=units,
        source=source,
    )


def _normalise(value):
    if isinstance(value, str):
        text = value.strip()
        for conv in (int, float):
            try:
                return conv(text)
            except ValueError:
                pass
        return text
    if isinstance(value, bool):
        return int(value)
    return value
