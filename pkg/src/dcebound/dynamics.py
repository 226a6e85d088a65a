"""Langevin dynamics of the mobile plate, x'' + gamma x' = s dP(t).

Three layers live here:

* integrators acting on sampled noise paths (:func:`integrate_plate`,
  :func:`exact_velocity_from_path`);
* the closed-form velocity/acceleration correlations as printed
  (``*_paper`` functions, kernel taken with the unsigned exponent);
* quadrature oracles for the true second moments of the model with the
  symmetric kernel exp(-lambda |t - t'|), including the velocity/noise cross
  terms that the printed acceleration formula leaves out.

Monte Carlo ensembles are compared against the oracles; the printed formulas
are only checked for internal consistency.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy import integrate
from scipy.signal import lfilter

from .errors import DegenerateRates, EmptyPath, NonPhysicalParams, QuadratureFailure
from .noise import NoiseParams, NoisePath, scenario_variance
from .scenario import ScenarioConfig

DEGENERATE_RTOL = 1e-9


@dataclass(frozen=True)
class DynamicsParams:
    gamma: float
    s: float
    v0: float
    noise: NoiseParams

    def __post_init__(self):
        if not self.gamma >= 0:
            raise NonPhysicalParams(f"gamma must be >= 0, got {self.gamma!r}")


def dynamics_params(scenario: ScenarioConfig, rate: float | None = None) -> DynamicsParams:
    lam = scenario.numeric_rate if rate is None else rate
    return DynamicsParams(
        gamma=scenario.plate.gamma,
        s=scenario.plate.s,
        v0=scenario.initial_velocity,
        noise=NoiseParams(scenario_variance(scenario), lam),
    )


@dataclass(frozen=True)
class PlateState:
    t: float
    x: float
    v: float
    a: float


@dataclass(frozen=True)
class Trajectory:
    dt: float
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    noise_meta: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.t)

    def states(self) -> Iterator[PlateState]:
        for row in zip(self.t, self.x, self.v, self.a):
            yield PlateState(*map(float, row))


def is_degenerate(gamma: float, lam: float) -> bool:
    if gamma == 0.0:
        return lam == 0.0
    return abs(gamma - lam) / gamma < DEGENERATE_RTOL


def _step_coefficients(gamma: float, s: float, dt: float) -> tuple[float, float]:
    """Exact one-step response to a force held constant over the step."""
    decay = math.exp(-gamma * dt)
    if gamma == 0.0:
        return 1.0, s * dt
    return decay, s * -math.expm1(-gamma * dt) / gamma


def velocity_response(noise: np.ndarray, params: DynamicsParams, dt: float) -> np.ndarray:
    """Velocities for noise samples along the last axis (any leading batch shape)."""
    decay, gain = _step_coefficients(params.gamma, params.s, dt)
    noise = np.asarray(noise, dtype=float)
    v = np.empty_like(noise)
    v[..., 0] = params.v0
    if noise.shape[-1] > 1:
        zi = np.full(noise.shape[:-1] + (1,), decay * params.v0)
        v[..., 1:] = lfilter([1.0], [1.0, -decay], gain * noise[..., :-1], axis=-1, zi=zi)[0]
    return v


def integrate_plate(path: NoisePath, params: DynamicsParams, x0: float = 0.0) -> Trajectory:
    """Advance the plate over a sampled noise path.

    Velocity uses the exact linear response to the force held at ``dP[i]``
    across each step; position is accumulated with the trapezoidal rule and
    acceleration is recorded as ``-gamma*v + s*dP``.
    """
    if len(path) == 0:
        raise EmptyPath("noise path has no samples")
    noise = np.asarray(path.samples, dtype=float)
    v = velocity_response(noise, params, path.dt)
    x = np.empty_like(v)
    x[0] = x0
    x[1:] = x0 + np.cumsum(0.5 * path.dt * (v[1:] + v[:-1]))
    a = -params.gamma * v + params.s * noise
    meta = {"seed": path.seed, **path.meta}
    return Trajectory(path.dt, path.times, x, v, a, meta)


def exact_velocity_from_path(path: NoisePath, params: DynamicsParams) -> np.ndarray:
    """Closed-form solution v(t) = v0 e^{-gt} + e^{-gt} int_0^t s dP(xi) e^{g xi} dxi.

    The integral is a left-endpoint rectangle sum over the sampled path.  It
    differs from :func:`integrate_plate` by O(dt).
    """
    if len(path) == 0:
        raise EmptyPath("noise path has no samples")
    noise = np.asarray(path.samples, dtype=float)
    dt, g, s = path.dt, params.gamma, params.s
    t = path.times
    if g * t[-1] < 600.0:
        growth = np.exp(g * t)
        partial = np.concatenate(([0.0], np.cumsum(s * noise[:-1] * growth[:-1] * dt)))
        return (params.v0 + partial) / growth
    # same sum, accumulated as a recursion to avoid overflowing exp(g t)
    decay = math.exp(-g * dt)
    v = np.empty_like(noise)
    v[0] = params.v0
    v[1:] = lfilter([1.0], [1.0, -decay], decay * s * dt * noise[:-1], zi=[decay * params.v0])[0]
    return v


# ---------------------------------------------------------------------------
# printed closed forms

def _check_rates(gamma, lam):
    if is_degenerate(gamma, lam):
        raise DegenerateRates(
            f"gamma={gamma!r} and lambda={lam!r} coincide; use the *_limit functions"
        )


def velocity_correlation_paper(t: float, t_prime: float, params: DynamicsParams) -> float:
    """<v(t) v(t')> as printed, valid for gamma != lambda."""
    g, lam = params.gamma, params.noise.rate
    _check_rates(g, lam)
    amp = params.s**2 * params.noise.variance
    first = (math.exp(lam * t) - math.exp(-g * t)) / (g + lam)
    second = (math.exp(-lam * t_prime) - math.exp(-g * t_prime)) / (g - lam)
    return params.v0**2 * math.exp(-g * (t + t_prime)) + amp * first * second


def velocity_correlation_printed_limit(t: float, t_prime: float, params: DynamicsParams) -> float:
    """gamma = lambda limit of :func:`velocity_correlation_paper`."""
    g = params.gamma
    amp = params.s**2 * params.noise.variance
    first = math.sinh(g * t) / g if g > 0 else t
    return params.v0**2 * math.exp(-g * (t + t_prime)) + amp * first * t_prime * math.exp(-g * t_prime)


def acceleration_variance_printed(t: float, params: DynamicsParams) -> float:
    """Mean-square acceleration at long times, as printed (initial velocity dropped)."""
    g, lam = params.gamma, params.noise.rate
    amp = params.s**2 * params.noise.variance
    if is_degenerate(g, lam):
        inner = g * t * -math.expm1(-2.0 * g * t) / 2.0
    else:
        num = 1.0 - math.exp((lam - g) * t) - math.exp(-(lam + g) * t) + math.exp(-2.0 * g * t)
        inner = g**2 * num / (g**2 - lam**2)
    return amp * (inner + 1.0)


def acceleration_correlation_paper(
    t: float, t_prime: float, params: DynamicsParams, long_time: bool = False
) -> float:
    """<a(t) a(t')> as printed: gamma^2 <v v> + s^2 <dP dP>.

    ``long_time=True`` drops the initial-velocity term; at ``t == t'`` this
    is the printed mean-square acceleration.
    """
    g, lam = params.gamma, params.noise.rate
    _check_rates(g, lam)
    if long_time and t == t_prime:
        return acceleration_variance_printed(t, params)
    amp = params.s**2 * params.noise.variance
    noise_term = amp * math.exp(-lam * (t_prime - t))
    if long_time:
        num = (
            math.exp(-lam * (t_prime - t))
            - math.exp(lam * t - g * t_prime)
            - math.exp(-g * t - lam * t_prime)
            + math.exp(-g * (t + t_prime))
        )
        return amp * g**2 * num / (g**2 - lam**2) + noise_term
    return g**2 * velocity_correlation_paper(t, t_prime, params) + noise_term


def acceleration_correlation_printed_limit(
    t: float, t_prime: float, params: DynamicsParams, long_time: bool = False
) -> float:
    g, lam = params.gamma, params.noise.rate
    amp = params.s**2 * params.noise.variance
    vv = velocity_correlation_printed_limit(t, t_prime, params)
    if long_time:
        vv -= params.v0**2 * math.exp(-g * (t + t_prime))
    return g**2 * vv + amp * math.exp(-lam * (t_prime - t))


# ---------------------------------------------------------------------------
# quadrature oracles

QUAD_RTOL = 1e-8


def _checked(value: float, abserr: float, scale: float, what: str) -> float:
    if not math.isfinite(value) or abserr > max(10 * QUAD_RTOL * abs(value), 1e-13 * scale):
        raise QuadratureFailure(f"{what}: error estimate {abserr:.3g} too large for value {value:.6g}")
    return value


def _run_quad(fn, what, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            return fn(*args, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise QuadratureFailure(f"{what}: {exc}") from exc


def _kernel_double_integral(t: float, tp: float, gamma: float, lam: float) -> float:
    """int_0^t int_0^t' e^{-g(t-xi)} e^{-g(t'-eta)} e^{-lam|xi-eta|} d eta d xi.

    Split along the diagonal so each piece is smooth.
    """
    if t == 0.0 or tp == 0.0:
        return 0.0

    def below(eta, xi):  # eta <= xi
        return math.exp(-gamma * (t - xi) - gamma * (tp - eta) - lam * (xi - eta))

    def above(eta, xi):  # eta >= xi
        return math.exp(-gamma * (t - xi) - gamma * (tp - eta) - lam * (eta - xi))

    opts = dict(epsabs=0.0, epsrel=QUAD_RTOL)
    total, err = 0.0, 0.0
    val, e = _run_quad(integrate.dblquad, "velocity covariance", below, 0.0, t,
                       lambda xi: 0.0, lambda xi: min(xi, tp), **opts)
    total, err = total + val, err + e
    if tp > 0:
        hi = min(t, tp)
        val, e = _run_quad(integrate.dblquad, "velocity covariance", above, 0.0, hi,
                           lambda xi: xi, lambda xi: tp, **opts)
        total, err = total + val, err + e
    return _checked(total, err, max(t, tp) ** 2, "velocity covariance")


def exact_velocity_covariance(t: float, t_prime: float, params: DynamicsParams) -> float:
    """Second moment <v(t) v(t')> of the model, by adaptive quadrature (rtol 1e-8)."""
    g, lam = params.gamma, params.noise.rate
    t, t_prime = sorted((t, t_prime))  # symmetric by construction, so evaluate one ordering
    det = params.v0**2 * math.exp(-g * (t + t_prime))
    if params.noise.variance == 0.0 or params.s == 0.0:
        return det
    amp = params.s**2 * params.noise.variance
    return det + amp * _kernel_double_integral(t, t_prime, g, lam)


def _velocity_noise_integral(t: float, tp: float, gamma: float, lam: float) -> float:
    """int_0^t e^{-g(t-xi)} e^{-lam|xi-t'|} d xi, i.e. <v(t) dP(t')> / (s var)."""
    if t == 0.0:
        return 0.0

    def f(xi):
        return math.exp(-gamma * (t - xi) - lam * abs(xi - tp))

    points = [tp] if 0.0 < tp < t else None
    val, err = _run_quad(integrate.quad, "velocity-noise covariance", f, 0.0, t,
                         epsabs=0.0, epsrel=QUAD_RTOL, points=points, limit=200)
    return _checked(val, err, t, "velocity-noise covariance")


def exact_acceleration_covariance(t: float, t_prime: float, params: DynamicsParams) -> float:
    """Second moment <a(t) a(t')> for a = -gamma v + s dP, cross terms included."""
    g, lam, s = params.gamma, params.noise.rate, params.s
    var = params.noise.variance
    t, t_prime = sorted((t, t_prime))
    vv = exact_velocity_covariance(t, t_prime, params)
    if var == 0.0 or s == 0.0:
        return g**2 * vv
    cross = s * var * (_velocity_noise_integral(t, t_prime, g, lam)
                       + _velocity_noise_integral(t_prime, t, g, lam))
    return g**2 * vv - g * s * cross + s**2 * var * math.exp(-lam * abs(t - t_prime))
