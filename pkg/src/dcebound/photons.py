"""Photon creation by the randomly moving plate.

The per-pair expectation is the perturbative mode-coupling result for a
number state; averaging it over the plate's acceleration statistics gives a
coefficient A(n, k) that grows like exp((lambda - gamma) t1) when the noise
decorrelates faster than the plate relaxes.  Everything that can grow that
way is carried as a :class:`~dcebound.logdomain.LogNumber`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from .dynamics import is_degenerate
from .errors import NonPhysicalParams, TruncationTooSmall
from .logdomain import ZERO, LogNumber, log10_expm1_over
from .noise import scenario_variance
from .scenario import ScenarioConfig

LOG_DOMAIN_EXPONENT = 300.0


@dataclass(frozen=True)
class ModePair:
    n: int
    k: int
    occupancy: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.k < 1 or int(self.n) != self.n or int(self.k) != self.k:
            raise NonPhysicalParams(f"mode indices must be integers >= 1, got n={self.n}, k={self.k}")
        if not (self.occupancy >= 0 and math.isfinite(self.occupancy)):
            raise NonPhysicalParams(f"occupancy must be finite and >= 0, got {self.occupancy!r}")


def photon_number_expectation(pair: ModePair, x0: float, a0: float, a1: float, c: float) -> float:
    """Expected quanta in mode n after the motion, starting from n_k quanta in mode k.

    ``a0`` and ``a1`` are the plate accelerations at the start and end of the
    motion, ``x0`` its final position.
    """
    n, k = pair.n, pair.k
    if n == k:
        return pair.occupancy
    amp = math.sqrt(n / k) * x0 * a1 / 6.0 - math.sqrt(k / n) * x0 * a0 / 6.0
    coupling = 36.0 * n**2 / (c**4 * math.pi**4) / (n - k) ** 6
    return pair.occupancy * coupling * amp**2


def planck_occupancy(omega: float, scenario: ScenarioConfig) -> float:
    """Bose-Einstein occupancy of a mode of angular frequency ``omega``."""
    T = scenario.thermal.temperature
    if T == 0.0:
        return 0.0
    x = scenario.constants.reduced_planck * omega / (scenario.constants.boltzmann * T)
    return 1.0 / math.expm1(x) if x < 700.0 else math.exp(-x)


def mode_occupancy(k: int, scenario: ScenarioConfig) -> float:
    if scenario.occupancy == "planck":
        return planck_occupancy(k * scenario.mode_angular_frequency, scenario)
    return float(scenario.occupancy)


def _rates(scenario: ScenarioConfig, rate: float | None) -> tuple[float, float]:
    lam = scenario.numeric_rate if rate is None else rate
    if not lam >= 0:
        raise NonPhysicalParams(f"noise rate must be >= 0, got {lam!r}")
    return scenario.plate.gamma, lam


def _relaxation_growth(gamma: float, lam: float, t1: float) -> LogNumber:
    """gamma^2/(gamma^2 - lam^2) * (1 - e^{(lam-g)t} + e^{-2gt} - e^{-(g+lam)t}).

    Rewritten as g^2 t/(g+lam) * expm1(E)/E * (1 - e^{-(g+lam)t}) with
    E = (lam-g) t, which stays finite through lam = gamma and for huge E.
    """
    if gamma == 0.0:
        return ZERO
    E = (lam - gamma) * t1
    log10_val = (
        2.0 * math.log10(gamma)
        + math.log10(t1)
        - math.log10(gamma + lam)
        + log10_expm1_over(E)
        + math.log10(-math.expm1(-(gamma + lam) * t1))
    )
    return LogNumber(1, log10_val)


def _coefficient_parts(scenario: ScenarioConfig, t1: float, rate: float | None):
    gamma, lam = _rates(scenario, rate)
    c = scenario.constants.light_speed
    variance = scenario_variance(scenario)
    scale = LogNumber.from_float(scenario.motion.final_position**2 * scenario.plate.s**2) * variance
    scale = scale / LogNumber.from_float(c**4 * math.pi**4)
    return scale, _relaxation_growth(gamma, lam, t1), gamma, lam


def mode_coefficient(n: int, k: int, scenario: ScenarioConfig, t1: float | None = None,
                     rate: float | None = None) -> LogNumber:
    """Ensemble-averaged coupling A(n, k) as a log-domain number."""
    t1 = scenario.motion.duration if t1 is None else t1
    scale, growth, _, lam = _coefficient_parts(scenario, t1, rate)
    return _coefficient(n, k, scale, growth, lam, t1)


def _coefficient(n, k, scale, growth, lam, t1) -> LogNumber:
    direct = n / k + k / n - 2.0 * math.exp(-lam * t1)
    bracket = LogNumber.from_float(direct) + growth * (n / k)
    return scale * bracket * float(n) ** 2


def ensemble_photon_number(pair: ModePair, scenario: ScenarioConfig, t1: float | None = None,
                           rate: float | None = None) -> float:
    """Expected quanta in mode n averaged over the plate motion.

    Returns ``inf`` when the value exceeds double range; use
    :func:`mode_coefficient` for the log-domain value.
    """
    if pair.n == pair.k:
        return pair.occupancy
    t1 = scenario.motion.duration if t1 is None else t1
    coeff = mode_coefficient(pair.n, pair.k, scenario, t1, rate)
    return float(coeff * (pair.occupancy / float(pair.n - pair.k) ** 6))


def _pairwise(values: list[LogNumber]) -> LogNumber:
    if not values:
        return ZERO
    while len(values) > 1:
        nxt = [values[i] + values[i + 1] for i in range(0, len(values) - 1, 2)]
        if len(values) % 2:
            nxt.append(values[-1])
        values = nxt
    return values[0]


@dataclass(frozen=True)
class ModeRate:
    k: int
    rate: float
    log10_rate: float
    tail_bound: float
    log10_tail_bound: float
    n_max: int
    log_domain: bool

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "rate": self.rate,
            "log10_rate": self.log10_rate,
            "tail_bound": self.tail_bound,
            "n_max": self.n_max,
            "log_domain": self.log_domain,
        }


def mode_creation_rate(k: int, scenario: ScenarioConfig, t1: float | None = None,
                       n_max: int | None = None, rate: float | None = None) -> ModeRate:
    """Relative creation rate for source mode k, summed over n <= n_max.

    The occupancy cancels.  ``tail_bound`` is a rigorous upper bound on the
    omitted terms n > n_max, from A(n,k) <= K[(1+G) n^3/k + n^2] and the
    Hurwitz zeta tails of m^-3 and m^-4.
    """
    t1 = scenario.motion.duration if t1 is None else t1
    n_max = scenario.n_max if n_max is None else n_max
    if n_max <= k:
        raise TruncationTooSmall(f"n_max={n_max} must exceed k={k}")
    scale, growth, _, lam = _coefficient_parts(scenario, t1, rate)
    terms = [
        _coefficient(n, k, scale, growth, lam, t1) / (t1 * float(n - k) ** 6)
        for n in range(1, n_max + 1)
        if n != k
    ]
    total = _pairwise(terms)

    m0 = n_max + 1 - k
    r = (n_max + 1) / m0
    envelope = (LogNumber.from_float(1.0) + growth) * (r**3 / k * float(zeta(3, m0)))
    envelope = envelope + r**2 * float(zeta(4, m0))
    tail = scale * envelope / t1
    return ModeRate(
        k=k,
        rate=float(total),
        log10_rate=total.log10,
        tail_bound=float(tail),
        log10_tail_bound=tail.log10,
        n_max=n_max,
        log_domain=growth.log10 > LOG_DOMAIN_EXPONENT / math.log(10.0),
    )


@dataclass(frozen=True)
class PhotonSpectrum:
    k: int
    occupancy: float
    expected: dict[int, float]
    n_max: int
    tail_bound: float


def photon_spectrum(k: int, scenario: ScenarioConfig, t1: float | None = None,
                    n_max: int | None = None, rate: float | None = None) -> PhotonSpectrum:
    t1 = scenario.motion.duration if t1 is None else t1
    n_max = scenario.n_max if n_max is None else n_max
    occ = mode_occupancy(k, scenario)
    expected = {
        n: ensemble_photon_number(ModePair(n, k, occ), scenario, t1, rate)
        for n in range(1, n_max + 1)
    }
    tail = mode_creation_rate(k, scenario, t1, n_max, rate).tail_bound * t1 * occ
    return PhotonSpectrum(k, occ, expected, n_max, tail)


# ---------------------------------------------------------------------------
# closed-form total rate

def rate_bracket(gamma: float, lam: float, t1: float) -> LogNumber:
    """gamma^2/(lam^2 - gamma^2) (e^{(lam-gamma) t1} - 1) + 5/4, in log domain.

    Evaluated as gamma^2 t1/(lam+gamma) * expm1(E)/E + 5/4 (E = (lam-gamma) t1),
    which is exact algebra and tends to gamma t1/2 + 5/4 at lam = gamma.
    """
    five_quarters = LogNumber.from_float(1.25)
    if gamma == 0.0:
        return five_quarters
    E = (lam - gamma) * t1
    if E <= LOG_DOMAIN_EXPONENT:
        lead = gamma**2 * t1 / (lam + gamma) * (math.expm1(E) / E if E != 0.0 else 1.0)
        return LogNumber.from_float(lead + 1.25)
    lead = LogNumber(1, 2.0 * math.log10(gamma) + math.log10(t1) - math.log10(lam + gamma)
                     + log10_expm1_over(E))
    return lead + five_quarters


@dataclass(frozen=True)
class CreationRateResult:
    per_mode: dict[int, float]
    total: float
    log10_total: float
    t1: float
    diagnostics: dict = field(default_factory=dict)


def total_creation_rate(scenario: ScenarioConfig, t1: float | None = None,
                        rate: float | None = None) -> CreationRateResult:
    """Closed-form total creation rate per volume (lowest pair k=1, n=2, long times).

    Warns when t1 is not long compared with 1/gamma and 1/lambda, where the
    closed form is not meant to apply.
    """
    t1 = scenario.motion.duration if t1 is None else t1
    gamma, lam = _rates(scenario, rate)
    variance = scenario_variance(scenario)
    c = scenario.constants.light_speed
    proviso = gamma * t1 >= 10.0 and lam * t1 >= 10.0
    if not proviso:
        warnings.warn(
            f"closed-form rate assumes t1 >> 1/gamma, 1/lambda (gamma*t1={gamma * t1:.3g}, "
            f"lambda*t1={lam * t1:.3g})",
            stacklevel=2,
        )
    bracket = rate_bracket(gamma, lam, t1)
    pref = 2.0 * scenario.motion.final_position**2 * scenario.plate.s**2
    value = LogNumber.from_float(pref) * variance * bracket / (t1 * c**4 * math.pi**4)
    total = float(value)
    return CreationRateResult(
        per_mode={1: total},
        total=total,
        log10_total=value.log10,
        t1=t1,
        diagnostics={
            "gamma": gamma,
            "lambda": lam,
            "bracket_log10": bracket.log10,
            "log_domain": (lam - gamma) * t1 > LOG_DOMAIN_EXPONENT,
            "degenerate": is_degenerate(gamma, lam),
            "proviso_satisfied": proviso,
        },
    )


def summed_creation_rate(scenario: ScenarioConfig, t1: float | None = None, k_max: int = 1,
                         n_max: int | None = None, rate: float | None = None) -> CreationRateResult:
    """Total of the per-mode rates for k = 1..k_max (the general mode sum)."""
    t1 = scenario.motion.duration if t1 is None else t1
    n_max = scenario.n_max if n_max is None else n_max
    modes = [mode_creation_rate(k, scenario, t1, n_max, rate) for k in range(1, k_max + 1)]
    total = _pairwise([LogNumber(1, m.log10_rate) for m in modes])
    return CreationRateResult(
        per_mode={m.k: m.rate for m in modes},
        total=float(total),
        log10_total=total.log10,
        t1=t1,
        diagnostics={"n_max": n_max, "tail_bound": sum(m.tail_bound for m in modes)},
    )


POSITIVITY_RATIOS = tuple(float(x) for x in np.logspace(-3.0, 3.0, 25))
POSITIVITY_GAMMA_T1 = tuple(float(x) for x in np.logspace(1.0, 4.0, 10))


def positivity_grid(scenario: ScenarioConfig, ratios=POSITIVITY_RATIOS,
                    gamma_t1=POSITIVITY_GAMMA_T1) -> list[tuple[float, float, float, bool]]:
    """Total creation rate over a (lambda/gamma, gamma*t1) grid at the scenario's gamma.

    Rows are ``(lambda/gamma, gamma*t1, log10 rate, rate > 0)``.
    """
    gamma = scenario.plate.gamma
    if not gamma > 0:
        raise NonPhysicalParams("positivity grid needs plate gamma > 0")
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for ratio in ratios:
            for gt in gamma_t1:
                res = total_creation_rate(scenario, t1=gt / gamma, rate=ratio * gamma)
                positive = res.log10_total > -math.inf and not math.isnan(res.log10_total)
                rows.append((ratio, gt, res.log10_total, positive))
    return rows
