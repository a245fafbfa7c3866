"""Physical and dimensionless parameters of the atom-cavity system.

Angular frequencies are stored in rad/s throughout. Conversion to the
normalized detuning axis (units of kappa/2) happens only where a
dimensionless model quantity is derived.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi

# Dimensionless factor applied to the peak Gaussian intensity 2P/(pi w0^2).
# Chosen so the default parameters give S = 12.
DEFAULT_INTENSITY_CALIBRATION = 0.47801


class ShiftSign(str, enum.Enum):
    """Orientation of the atom-induced resonance shift on the detuning axis.

    ``AS_WRITTEN`` uses ``Delta + A*n`` so the loaded resonance sits at
    negative detuning for positive A. ``FIGURE_CONVENTION`` uses
    ``Delta - A*n`` which puts the bistable region at positive detuning.
    """

    AS_WRITTEN = "as_written"
    FIGURE_CONVENTION = "figure_convention"

    @property
    def sign(self) -> float:
        return 1.0 if self is ShiftSign.AS_WRITTEN else -1.0


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters (SI units, angular rates in rad/s)."""

    kappa: float = TWO_PI * 70e3
    gamma: float = TWO_PI * 182e3
    g0: float = TWO_PI * 30e3
    delta_ca: float = TWO_PI * 30e6
    n_atoms: float = 150_000.0
    i_sat: float = 1.4
    pump_power: float = 135e-6
    waist: float = 90e-6
    mirror_T: float | None = None
    mirror_R: float | None = None
    enhancement_G: float | None = None
    intensity_calibration: float = DEFAULT_INTENSITY_CALIBRATION

    def __post_init__(self) -> None:
        for name in ("kappa", "gamma", "g0", "i_sat", "waist", "intensity_calibration"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not math.isfinite(self.delta_ca) or self.delta_ca == 0:
            raise ValueError("delta_ca must be finite and nonzero")
        for name in ("n_atoms", "pump_power"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

        have_t = self.mirror_T is not None
        have_r = self.mirror_R is not None
        if have_t != have_r:
            raise ValueError("mirror_T and mirror_R must be given together")
        if have_t:
            if not 0 < self.mirror_R < 1:
                raise ValueError(f"mirror_R must lie in (0, 1), got {self.mirror_R}")
            if not 0 < self.mirror_T <= 1:
                raise ValueError(f"mirror_T must lie in (0, 1], got {self.mirror_T}")
            g_mirrors = self.mirror_T / (1.0 - self.mirror_R) ** 2
            if self.enhancement_G is None:
                object.__setattr__(self, "enhancement_G", g_mirrors)
            elif not math.isclose(self.enhancement_G, g_mirrors, rel_tol=1e-9):
                raise ValueError(
                    f"enhancement_G={self.enhancement_G} disagrees with "
                    f"T/(1-R)^2={g_mirrors}")
        elif self.enhancement_G is None:
            object.__setattr__(self, "enhancement_G", 360.0)
        if not self.enhancement_G > 0:
            raise ValueError("enhancement_G must be > 0")

    @property
    def tau(self) -> float:
        """Excited-state lifetime 1/gamma (s)."""
        return 1.0 / self.gamma

    @property
    def detuned_saturation_factor(self) -> float:
        """4*delta_ca^2/gamma^2, the factor raising I_sat off resonance."""
        return 4.0 * self.delta_ca**2 / self.gamma**2

    @property
    def i_sat_eff(self) -> float:
        return self.detuned_saturation_factor * self.i_sat

    @property
    def input_intensity(self) -> float:
        """Calibrated pump intensity (W/m^2) from pump power and waist."""
        peak = 2.0 * self.pump_power / (math.pi * self.waist**2)
        return self.intensity_calibration * peak


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model constants.

    ``detuned_saturation`` only affects the population equation of the
    time-domain model: False applies the on-resonance ``I_sat`` literally,
    which no longer reproduces the steady-state curve.
    """

    a_param: float
    s_param: float
    shift_sign: ShiftSign = ShiftSign.FIGURE_CONVENTION
    detuned_saturation: bool = field(default=True)

    def __post_init__(self) -> None:
        if not math.isfinite(self.a_param):
            raise ValueError("a_param must be finite")
        if not (math.isfinite(self.s_param) and self.s_param >= 0):
            raise ValueError(f"s_param must be finite and >= 0, got {self.s_param!r}")
        object.__setattr__(self, "shift_sign", ShiftSign(self.shift_sign))

    @property
    def signed_a(self) -> float:
        """A with the orientation sign applied: Delta_eff = Delta + signed_a * n."""
        return self.shift_sign.sign * self.a_param

    @classmethod
    def from_physical(cls, p: PhysicalParams,
                      shift_sign: ShiftSign = ShiftSign.FIGURE_CONVENTION) -> ModelParams:
        return cls(derive_A(p), derive_S(p), shift_sign)


def dispersive_shift(n_delta: float, p: PhysicalParams) -> float:
    """Cavity resonance shift (rad/s) from ``n_delta`` ground-state-excess atoms."""
    if n_delta < 0 or n_delta > p.n_atoms:
        raise ValueError(f"n_delta must lie in [0, {p.n_atoms}], got {n_delta}")
    return p.g0**2 * n_delta / (6.0 * p.delta_ca)


def steady_population_difference(i_cav: float, p: PhysicalParams) -> float:
    if i_cav < 0:
        raise ValueError(f"intensity must be >= 0, got {i_cav}")
    return p.n_atoms / (1.0 + i_cav / p.i_sat_eff)


def derive_A(p: PhysicalParams) -> float:
    """Interaction strength N g0^2 / (3 delta_ca kappa), signed like delta_ca."""
    return p.n_atoms * p.g0**2 / (3.0 * p.delta_ca * p.kappa)


def derive_S(p: PhysicalParams) -> float:
    """Saturation parameter G I_in gamma^2 / (4 delta_ca^2 I_sat)."""
    return p.enhancement_G * p.input_intensity / p.i_sat_eff
