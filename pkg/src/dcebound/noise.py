"""Blackbody pressure fluctuations and the exponentially correlated noise they drive.

Analytic pieces: radiation pressure, single-region and pressure-difference
variances, the exponential time-correlation kernel, and the wall-absorption
relaxation model.  :func:`sample_noise_path` realises the kernel exactly on
a uniform grid (an AR(1) recursion, i.e. the exact Ornstein-Uhlenbeck
transition), so path statistics do not depend on ``dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import (
    InvalidStep,
    NegativeTemperature,
    NonPhysicalParams,
    NonPositiveLength,
    NonPositiveVolume,
    ReflectivityOutOfRange,
    ZeroAbsorptivity,
)
from .scenario import CavityGeometry, PhysicalConstants, ScenarioConfig


@dataclass(frozen=True)
class NoiseParams:
    variance: float  # <dP^2>, Pa^2
    rate: float  # lambda, 1/s

    def __post_init__(self):
        if not self.variance >= 0:
            raise NonPhysicalParams(f"noise variance must be >= 0, got {self.variance!r}")
        if not self.rate >= 0:
            raise NonPhysicalParams(f"noise rate must be >= 0, got {self.rate!r}")


@dataclass(frozen=True)
class NoisePath:
    dt: float
    samples: np.ndarray
    seed: int | None = None
    params: NoiseParams | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.samples))


def _check_temperature(T):
    if not T >= 0:
        raise NegativeTemperature(f"temperature must be >= 0, got {T!r}")


def blackbody_pressure(T: float, constants: PhysicalConstants) -> float:
    """Radiation pressure alpha*T**4/3 (one third of the energy density)."""
    _check_temperature(T)
    return constants.radiation_constant_alpha * T**4 / 3.0


def pressure_variance_single(T: float, V: float, constants: PhysicalConstants) -> float:
    """Mean-square pressure fluctuation of one region, alpha*k_B*T**5/(3V)."""
    _check_temperature(T)
    if not V > 0:
        raise NonPositiveVolume(f"volume must be > 0, got {V!r}")
    return constants.radiation_constant_alpha * constants.boltzmann * T**5 / (3.0 * V)


def pressure_diff_variance(T: float, V: float, constants: PhysicalConstants) -> float:
    """Variance of the pressure difference across the plate: two independent regions."""
    return 2.0 * pressure_variance_single(T, V, constants)


def pressure_diff_correlation(t: float, t_prime: float, params: NoiseParams) -> float:
    return params.variance * math.exp(-params.rate * abs(t_prime - t))


def scenario_variance(scenario: ScenarioConfig) -> float:
    """Pressure-difference variance of a scenario, honouring ``noise_variance`` overrides.

    The variance uses the full cavity volume, as written for the two regions.
    """
    if scenario.noise_variance is not None:
        return scenario.noise_variance
    return pressure_diff_variance(
        scenario.thermal.temperature, scenario.geometry.volume, scenario.constants
    )


def relaxation_rate(R: float, lx: float, c: float) -> float:
    """Wall-absorption relaxation rate 3(1-R)c/(2 lx)."""
    if not 0.0 <= R <= 1.0:
        raise ReflectivityOutOfRange(f"reflectivity must lie in [0, 1], got {R!r}")
    if not lx > 0:
        raise NonPositiveLength(f"length must be > 0, got {lx!r}")
    return 3.0 * (1.0 - R) * c / (2.0 * lx)


def relaxation_rate_from_deficit(deficit: float, lx: float, c: float) -> float:
    """Same as :func:`relaxation_rate` but takes 1-R directly (keeps precision when R ~ 1)."""
    if not 0.0 <= deficit <= 1.0:
        raise ReflectivityOutOfRange(f"1-R must lie in [0, 1], got {deficit!r}")
    return 3.0 * deficit * c / (2.0 * lx)


def relaxation_length(scenario: ScenarioConfig) -> float:
    g = scenario.geometry
    return g.lx if scenario.relaxation_length == "lx" else g.half_length


@dataclass(frozen=True)
class EnergyChain:
    energy_density: float  # u = alpha T^4
    emission_intensity: float  # J = c alpha T^4 / 4
    delta_u: float  # alpha (T^4 - T0^4)
    delta_j: float  # c delta_u / 4
    relaxation_time: float  # dE / (S A dJ); its T-independent limit when T == T0


def appendix_energy_chain(
    T: float,
    T0: float,
    geometry: CavityGeometry,
    constants: PhysicalConstants,
    absorptivity: float = 1.0,
) -> EnergyChain:
    """Relaxation of the cavity field by exchange with the walls.

    The internal-energy excess dE = V du relaxes through the walls (area
    ``geometry.total_surface``) at rate S*A*dJ, giving the time dE/(S A dJ)
    which is independent of the temperatures.  For a cube this equals the
    inverse of :func:`relaxation_rate`.
    """
    _check_temperature(T)
    _check_temperature(T0)
    if absorptivity == 0:
        raise ZeroAbsorptivity("relaxation time undefined for a perfectly reflecting wall")
    if not 0 < absorptivity <= 1:
        raise ReflectivityOutOfRange(f"absorptivity must lie in (0, 1], got {absorptivity!r}")
    alpha, c = constants.radiation_constant_alpha, constants.light_speed
    u = alpha * T**4
    J = 0.25 * c * u
    du = u - alpha * T0**4
    dJ = 0.25 * c * du
    if du == 0:
        # the ratio is 0/0 but its value does not depend on du
        dt = 4.0 * geometry.volume / (geometry.total_surface * absorptivity * c)
    else:
        dt = geometry.volume * du / (geometry.total_surface * absorptivity * dJ)
    return EnergyChain(u, J, du, dJ, dt)


# ---------------------------------------------------------------------------
# sampling

def path_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for path ``index`` of an ensemble; depends only on (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def ar1_filter(normals: np.ndarray, params: NoiseParams, dt: float) -> np.ndarray:
    """Map standard normals of shape (..., n+1) onto exact OU samples along the last axis.

    ``normals[..., 0]`` seeds the stationary initial value; the rest drive the
    update dP[i+1] = rho dP[i] + sd*sqrt(1-rho^2)*xi[i], rho = exp(-lambda dt).
    """
    sd = math.sqrt(params.variance)
    rho = math.exp(-params.rate * dt)
    innov = sd * math.sqrt(-math.expm1(-2.0 * params.rate * dt))
    x = normals * innov
    x[..., 0] = sd * normals[..., 0]
    return lfilter([1.0], [1.0, -rho], x, axis=-1)


def sample_noise_path(
    params: NoiseParams, dt: float, n_steps: int, seed: int, index: int = 0
) -> NoisePath:
    """Exact stationary sample path with ``n_steps + 1`` points (t = 0 .. n_steps*dt)."""
    if not dt > 0:
        raise InvalidStep(f"dt must be > 0, got {dt!r}")
    if not n_steps >= 1:
        raise InvalidStep(f"n_steps must be >= 1, got {n_steps!r}")
    normals = path_rng(seed, index).standard_normal(n_steps + 1)
    samples = ar1_filter(normals, params, dt)
    return NoisePath(dt, samples, seed, params, {"index": index, "n_steps": n_steps})


def sample_noise_path_two_regions(
    single_variance: float, rate: float, dt: float, n_steps: int, seed: int, index: int = 0
) -> NoisePath:
    """Alternative sampler: two independent region paths, differenced.

    Statistically identical to :func:`sample_noise_path` with twice the variance.
    """
    rng = path_rng(seed, index)
    one = NoiseParams(single_variance, rate)
    left = ar1_filter(rng.standard_normal(n_steps + 1), one, dt)
    right = ar1_filter(rng.standard_normal(n_steps + 1), one, dt)
    params = NoiseParams(2.0 * single_variance, rate)
    return NoisePath(dt, left - right, seed, params, {"index": index, "two_regions": True})
