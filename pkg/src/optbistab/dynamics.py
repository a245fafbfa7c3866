"""Time-domain model: driven cavity field coupled to a saturable population.

The integrated variables are the normalized field ``e = E_cav/(sqrt(G) E_in)``
and the population fraction ``n = N_delta/N``::

    de/dt = (kappa/2) * (i - e + i*(Delta + sA*n)*e)
    dn/dt = (1/tau)   * (1 - n*(1 + S*|e|^2))

with ``sA`` the signed interaction strength. Fixed points of this system
are exactly the solutions of the steady-state resonance equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .params import ModelParams, PhysicalParams

DEFAULT_OUTPUT_DT = 0.5e-6
FIXED_STEP_DT = 10e-9


class IntegrationError(RuntimeError):
    """Raised when the integrator cannot proceed; carries the failure time."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:.6g} s")
        self.time = time


@dataclass(frozen=True)
class NormalizedState:
    field_re: float
    field_im: float
    pop_fraction: float

    def __post_init__(self) -> None:
        if not 0.0 < self.pop_fraction <= 1.0:
            raise ValueError(f"pop_fraction must lie in (0, 1], got {self.pop_fraction}")
        if not self.intensity <= 1.0 + 1e-6:
            raise ValueError(f"|e|^2 = {self.intensity} exceeds 1")

    @property
    def field(self) -> complex:
        return complex(self.field_re, self.field_im)

    @property
    def intensity(self) -> float:
        return self.field_re**2 + self.field_im**2

    def as_array(self) -> np.ndarray:
        return np.array([self.field_re, self.field_im, self.pop_fraction])

    @classmethod
    def dark(cls) -> NormalizedState:
        return cls(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class ChirpSpec:
    """Linear ramp of the normalized pump detuning over ``duration`` seconds."""

    start: float
    end: float
    duration: float

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise ValueError(f"chirp duration must be > 0, got {self.duration}")

    def detuning_at(self, t):
        frac = np.clip(np.asarray(t) / self.duration, 0.0, 1.0)
        return self.start + (self.end - self.start) * frac


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n, 3): field_re, field_im, pop_fraction
    detuning_norm: np.ndarray

    @property
    def intensity(self) -> np.ndarray:
        return self.states[:, 0] ** 2 + self.states[:, 1] ** 2

    @property
    def pop_fraction(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def output_dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else math.nan

    def state(self, k: int) -> NormalizedState:
        x, y, n = self.states[k]
        return NormalizedState(float(x), float(y), float(n))


def population_saturation(m: ModelParams, p: PhysicalParams) -> float:
    """Coefficient multiplying |e|^2 in the population relaxation rate."""
    if m.detuned_saturation:
        return m.s_param
    return m.s_param * p.detuned_saturation_factor


def field_derivative(state: NormalizedState, detuning_norm: float,
                     m: ModelParams, p: PhysicalParams) -> complex:
    e = state.field
    d_eff = detuning_norm + m.signed_a * state.pop_fraction
    return 0.5 * p.kappa * (1j - e + 1j * d_eff * e)


def population_derivative(state: NormalizedState, m: ModelParams, p: PhysicalParams) -> float:
    s_pop = population_saturation(m, p)
    return (1.0 - state.pop_fraction * (1.0 + s_pop * state.intensity)) / p.tau


def jacobian_arrays(x, y, n, detuning_norm, a_signed, s_pop, half_kappa, inv_tau):
    """Broadcasting Jacobian of (dx, dy, dn) w.r.t. (x, y, n); shape (..., 3, 3)."""
    x, y, n, d = np.broadcast_arrays(*(np.asarray(v, dtype=float)
                                       for v in (x, y, n, detuning_norm)))
    d_eff = d + a_signed * n
    jac = np.empty(x.shape + (3, 3))
    jac[..., 0, 0] = -half_kappa
    jac[..., 0, 1] = -half_kappa * d_eff
    jac[..., 0, 2] = -half_kappa * a_signed * y
    jac[..., 1, 0] = half_kappa * d_eff
    jac[..., 1, 1] = -half_kappa
    jac[..., 1, 2] = half_kappa * a_signed * x
    jac[..., 2, 0] = -2.0 * inv_tau * s_pop * n * x
    jac[..., 2, 1] = -2.0 * inv_tau * s_pop * n * y
    jac[..., 2, 2] = -inv_tau * (1.0 + s_pop * (x * x + y * y))
    return jac


def jacobian(state: NormalizedState, detuning_norm: float,
             m: ModelParams, p: PhysicalParams) -> np.ndarray:
    """Analytic 3x3 Jacobian (entries in 1/s)."""
    return jacobian_arrays(state.field_re, state.field_im, state.pop_fraction,
                           detuning_norm, m.signed_a, population_saturation(m, p),
                           0.5 * p.kappa, 1.0 / p.tau)


def fixed_point_arrays(intensity_norm, detuning_norm, m: ModelParams):
    """Field quadratures and population at a steady-state root (vectorized)."""
    i = np.asarray(intensity_norm, dtype=float)
    n = 1.0 / (1.0 + m.s_param * i)
    d_eff = np.asarray(detuning_norm, dtype=float) + m.signed_a * n
    denom = 1.0 + d_eff * d_eff
    return -d_eff / denom, 1.0 / denom, n


def fixed_point(intensity_norm: float, detuning_norm: float, m: ModelParams) -> NormalizedState:
    x, y, n = fixed_point_arrays(intensity_norm, detuning_norm, m)
    return NormalizedState(float(x), float(y), float(n))


def integrate(initial: NormalizedState, drive: ChirpSpec | float,
              m: ModelParams, p: PhysicalParams, *,
              t_end: float | None = None,
              output_dt: float = DEFAULT_OUTPUT_DT,
              method: str = "rk45",
              atol: float = 1e-9,
              rtol: float = 1e-9,
              fixed_dt: float = FIXED_STEP_DT) -> Trajectory:
    """Integrate the coupled field/population system.

    ``drive`` is either a ChirpSpec or a fixed normalized detuning. For a
    chirp, ``t_end`` defaults to the chirp duration; after the ramp ends the
    detuning holds at ``chirp.end``. ``method`` is ``"rk45"`` (adaptive
    Dormand-Prince) or ``"rk4"`` (fixed step ``fixed_dt``, deterministic).
    The output is resampled to a uniform ``output_dt`` grid.
    """
    if not output_dt > 0:
        raise ValueError("output_dt must be > 0")
    if isinstance(drive, ChirpSpec):
        d0, d1, ramp = float(drive.start), float(drive.end), float(drive.duration)
        if t_end is None:
            t_end = ramp
    else:
        d0 = d1 = float(drive)
        ramp = 0.0
        if t_end is None:
            raise ValueError("t_end is required for a fixed detuning")
    if not t_end > 0:
        raise ValueError("t_end must be > 0")

    half_kappa = 0.5 * p.kappa
    inv_tau = 1.0 / p.tau
    s_pop = population_saturation(m, p)
    max_step = 0.05 * min(1.0 / p.kappa, p.tau)
    y0 = initial.as_array()

    if method == "rk45":
        status, t_stop, out, _ = _kernels.dopri5(
            y0, float(t_end), float(output_dt), d0, d1, ramp, m.signed_a, s_pop,
            half_kappa, inv_tau, float(atol), float(rtol), max_step, 1e-7 * max_step)
    elif method == "rk4":
        if fixed_dt > max_step:
            raise ValueError(f"fixed_dt {fixed_dt} exceeds resolution limit {max_step}")
        status, t_stop, out, _ = _kernels.rk4(
            y0, float(t_end), float(output_dt), d0, d1, ramp, m.signed_a, s_pop,
            half_kappa, inv_tau, float(fixed_dt))
    else:
        raise ValueError(f"unknown method {method!r}")

    if status == 1:
        raise IntegrationError("step size underflow", t_stop)
    if status == 2:
        raise IntegrationError("non-finite state", t_stop)

    times = np.arange(out.shape[0]) * output_dt
    if ramp > 0:
        detuning = d0 + (d1 - d0) * np.clip(times / ramp, 0.0, 1.0)
    else:
        detuning = np.full_like(times, d0)
    return Trajectory(times, out, detuning)


def chirped_scan(chirp: ChirpSpec, m: ModelParams, p: PhysicalParams, **kwargs) -> Trajectory:
    """Chirped scan starting from a dark cavity with unsaturated atoms."""
    return integrate(NormalizedState.dark(), chirp, m, p, **kwargs)
