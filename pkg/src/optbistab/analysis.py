"""Trace averaging, short-time spectra and (A, S) fits to scan traces."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import windows

from .dynamics import Trajectory
from .params import ModelParams, PhysicalParams, ShiftSign, derive_A, derive_S
from .steady import Direction, ScanTrace, hysteresis_scan, scan_pair_values

FOLD_WEIGHT = 0.25
FOLD_HALO = 2
NO_OSCILLATION_RATIO = 5.0
# oscillation amplitude below this fraction of the section level counts as silence
SILENCE_FLOOR = 1e-3


@dataclass(frozen=True)
class Spectrogram:
    time_bins: np.ndarray
    freq_bins: np.ndarray
    magnitude: np.ndarray  # (time, frequency)
    levels: np.ndarray  # RMS of each raw section, used as a silence reference
    window_sum: float


@dataclass(frozen=True)
class FitResult:
    a_est: float
    s_est: float
    residual_rms: float
    converged: bool
    iterations: int = 0


def moving_average(values, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at the ends."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window > n:
        raise ValueError(f"window {window} exceeds trace length {n}")
    if window == 1:
        return x.copy()
    half = window // 2
    k = np.arange(n)
    h = np.minimum(half, np.minimum(k, n - 1 - k))
    csum = np.concatenate([[0.0], np.cumsum(x)])
    return (csum[k + h + 1] - csum[k - h]) / (2 * h + 1)


def average_trace(trace: ScanTrace, window: int) -> ScanTrace:
    if window == 1:
        return trace
    return ScanTrace(trace.direction, trace.detuning_norm,
                     moving_average(trace.intensity_norm, window), trace.folds)


def trajectory_trace(traj: Trajectory) -> ScanTrace:
    """Intensity vs detuning over the chirped part of a trajectory."""
    d = traj.detuning_norm
    if d.size < 2 or d[1] == d[0]:
        raise ValueError("trajectory has no detuning ramp")
    direction = Direction.INCREASING if d[1] > d[0] else Direction.DECREASING
    steps = np.diff(d)
    moving = steps > 0 if direction is Direction.INCREASING else steps < 0
    stop = int(np.argmin(moving)) + 1 if not moving.all() else d.size
    return ScanTrace(direction, d[:stop], traj.intensity[:stop])


def stft(series, dt: float, window_len: int = 256, hop: int | None = None) -> Spectrogram:
    """Hann-windowed magnitude spectra of mean-subtracted sections.

    ``hop`` defaults to half the window (50 % overlap). Time bins are
    section centers measured from the first sample.
    """
    x = np.asarray(series, dtype=float)
    if hop is None:
        hop = max(window_len // 2, 1)
    if window_len < 2 or window_len > x.size:
        raise ValueError(f"window_len must lie in [2, {x.size}], got {window_len}")
    if hop < 1:
        raise ValueError("hop must be >= 1")
    n_sec = (x.size - window_len) // hop + 1
    if n_sec < 1:
        raise ValueError("series too short for a single section")

    idx = np.arange(window_len)[None, :] + hop * np.arange(n_sec)[:, None]
    sections = x[idx]
    levels = np.sqrt(np.mean(sections**2, axis=1))
    sections = sections - sections.mean(axis=1, keepdims=True)
    win = hann(window_len)
    mag = np.abs(np.fft.rfft(sections * win, axis=1))
    times = (hop * np.arange(n_sec) + 0.5 * (window_len - 1)) * dt
    freqs = np.fft.rfftfreq(window_len, dt)
    return Spectrogram(times, freqs, mag, levels, float(win.sum()))


def hann(window_len: int) -> np.ndarray:
    """Periodic Hann window, as applied by :func:`stft`."""
    return windows.hann(window_len, sym=False)


def dominant_frequency(spec: Spectrogram, band: tuple[float, float]):
    """Peak frequency per time bin inside ``band`` (Hz).

    Returns ``(times, freqs)``. A bin reports NaN (no oscillation) when its
    band peak is below five times the median band magnitude, when the peak
    is not a local maximum of the full spectrum (leakage from a slow trend
    decays monotonically from DC), or when the implied amplitude is
    negligible against the section level.
    """
    lo, hi = band
    sel = np.flatnonzero((spec.freq_bins >= lo) & (spec.freq_bins <= hi))
    if lo >= hi or sel.size == 0:
        raise ValueError(f"band {band} selects no frequency bins")
    mags = spec.magnitude[:, sel]
    rows = np.arange(mags.shape[0])
    peak_idx = np.argmax(mags, axis=1)
    peak = mags[rows, peak_idx]
    median = np.median(mags, axis=1)

    full = spec.magnitude
    j = sel[peak_idx]
    below = np.where(j > 0, full[rows, np.maximum(j - 1, 0)], np.inf)
    above = np.where(j < full.shape[1] - 1, full[rows, np.minimum(j + 1, full.shape[1] - 1)], 0.0)
    local_max = (peak > below) & (peak >= above)

    amplitude = 2.0 * peak / spec.window_sum
    silent = amplitude <= SILENCE_FLOOR * spec.levels
    weak = peak < NO_OSCILLATION_RATIO * median
    out = np.where(silent | weak | ~local_max, np.nan, spec.freq_bins[j])
    return spec.time_bins.copy(), out


def _fold_weights(n: int, folds) -> np.ndarray:
    w = np.ones(n)
    for f in folds:
        w[max(f - FOLD_HALO, 0):min(f + FOLD_HALO + 1, n)] = FOLD_WEIGHT
    return w


class _Objective:
    """Weighted squared residual of both traces against the model scans."""

    def __init__(self, up: ScanTrace, down: ScanTrace, shift_sign: ShiftSign,
                 p: PhysicalParams):
        self.grid = up.detuning_norm
        self.measured = np.concatenate([up.intensity_norm, down.intensity_norm[::-1]])
        self.shift_sign = shift_sign
        self.p = p

    def residuals(self, a: float, s: float):
        m = ModelParams(a, s, self.shift_sign)
        model_up, model_down, folds = scan_pair_values(self.grid, m, self.p)
        w = _fold_weights(self.grid.size, folds)
        return np.concatenate([model_up, model_down]) - self.measured, np.concatenate([w, w])

    def __call__(self, x) -> float:
        r, w = self.residuals(float(x[0]), float(x[1]))
        return float(np.sum(w * r * r))


def _check_pair(up: ScanTrace, down: ScanTrace) -> None:
    if up.direction is not Direction.INCREASING or down.direction is not Direction.DECREASING:
        raise ValueError("expected one increasing and one decreasing trace")
    if len(up) != len(down) or not np.allclose(up.detuning_norm, down.detuning_norm[::-1],
                                                rtol=0, atol=1e-9):
        raise ValueError("up and down traces must share a detuning grid")


def fit_model(up: ScanTrace, down: ScanTrace,
              a_bounds: tuple[float, float] = (0.0, 60.0),
              s_bounds: tuple[float, float] = (0.0, 30.0),
              shift_sign: ShiftSign | str = ShiftSign.FIGURE_CONVENTION,
              physical: PhysicalParams | None = None,
              stability_params: PhysicalParams | None = None,
              max_iter: int = 2000,
              workers: int = 4) -> FitResult:
    """Least-squares fit of (A, S) to an up/down scan pair.

    Nelder-Mead with bound clamping. The start point comes from the
    physical parameters when given, otherwise from the best node of a
    20 x 20 grid over the bounds (evaluated on ``workers`` threads).
    Samples within two grid steps of a model fold are down-weighted.
    """
    _check_pair(up, down)
    bounds = [tuple(map(float, a_bounds)), tuple(map(float, s_bounds))]
    for lo, hi in bounds:
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError(f"invalid bounds {bounds}")
    if bounds[1][0] < 0:
        raise ValueError("S bounds must be non-negative")

    objective = _Objective(up, down, ShiftSign(shift_sign), stability_params or PhysicalParams())

    if physical is not None:
        x0 = np.array([np.clip(derive_A(physical), *bounds[0]),
                       np.clip(derive_S(physical), *bounds[1])])
    else:
        nodes = list(itertools.product(np.linspace(*bounds[0], 20), np.linspace(*bounds[1], 20)))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = list(pool.map(objective, nodes))
        else:
            values = [objective(x) for x in nodes]
        x0 = np.array(nodes[int(np.argmin(values))])

    res = minimize(objective, x0, method="Nelder-Mead", bounds=bounds,
                   options={"xatol": 1e-6, "fatol": np.inf, "maxiter": max_iter,
                            "maxfev": 4 * max_iter})
    simplex = res.final_simplex[0]
    spread = np.max(np.abs(simplex - simplex[0]), axis=0)
    converged = bool(np.all(spread < 1e-6))

    a_est, s_est = (float(v) for v in res.x)
    resid, _ = objective.residuals(a_est, s_est)
    return FitResult(a_est, s_est, float(np.sqrt(np.mean(resid**2))), converged, int(res.nit))


def synthetic_pair(grid, m: ModelParams, noise_rms: float = 0.0,
                   rng: np.random.Generator | None = None,
                   p: PhysicalParams | None = None) -> tuple[ScanTrace, ScanTrace]:
    """Model up/down traces with optional additive Gaussian intensity noise."""
    up_grid = np.sort(np.asarray(grid, dtype=float))
    up = hysteresis_scan(up_grid, Direction.INCREASING, m, p)
    down = hysteresis_scan(up_grid[::-1], Direction.DECREASING, m, p)
    if noise_rms > 0:
        rng = rng if rng is not None else np.random.default_rng()
        up = ScanTrace(up.direction, up.detuning_norm,
                       up.intensity_norm + rng.normal(0.0, noise_rms, len(up)), up.folds)
        down = ScanTrace(down.direction, down.detuning_norm,
                         down.intensity_norm + rng.normal(0.0, noise_rms, len(down)), down.folds)
    return up, down
