"""Dispersive optical bistability of a saturable two-level medium in a driven cavity."""

from .analysis import (FitResult, Spectrogram, average_trace, dominant_frequency, fit_model,
                       stft, synthetic_pair)
from .dynamics import (ChirpSpec, IntegrationError, NormalizedState, Trajectory, chirped_scan,
                       field_derivative, integrate, jacobian, population_derivative)
from .params import (ModelParams, PhysicalParams, ShiftSign, derive_A, derive_S,
                     dispersive_shift, steady_population_difference)
from .steady import (BistableRegion, DegenerateCubicError, Direction, ScanTrace,
                     SteadySolution, bistable_region, classify_stability,
                     empty_cavity_intensity, hysteresis_scan, scan_pair, steady_roots)

__version__ = "0.1.0"

__all__ = [
    "average_trace",
    "bistable_region",
    "BistableRegion",
    "chirped_scan",
    "ChirpSpec",
    "classify_stability",
    "DegenerateCubicError",
    "derive_A",
    "derive_S",
    "Direction",
    "dispersive_shift",
    "dominant_frequency",
    "empty_cavity_intensity",
    "field_derivative",
    "fit_model",
    "FitResult",
    "hysteresis_scan",
    "integrate",
    "IntegrationError",
    "jacobian",
    "ModelParams",
    "NormalizedState",
    "PhysicalParams",
    "population_derivative",
    "scan_pair",
    "ScanTrace",
    "ShiftSign",
    "Spectrogram",
    "steady_population_difference",
    "steady_roots",
    "SteadySolution",
    "stft",
    "synthetic_pair",
    "Trajectory",
]
