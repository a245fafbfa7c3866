"""Plot-ready CSV files: scan traces, trajectories and spectrograms.

Every file has a single header line naming each column with its unit in
brackets. Values are written with 9 significant digits.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analysis import Spectrogram
from .dynamics import Trajectory
from .steady import Direction, ScanTrace

FMT = "%.9g"
TRACE_COLUMNS = ("detuning_norm [kappa/2]", "intensity_norm [1]")
TRAJECTORY_COLUMNS = ("t_s [s]", "detuning_norm [kappa/2]", "intensity_norm [1]",
                      "pop_fraction [1]")
SPECTROGRAM_COLUMNS = ("time_s [s]", "freq_hz [Hz]", "magnitude [arb]")
MAP_COLUMNS = ("a_param [1]", "detuning_norm [kappa/2]", "intensity_norm [1]")


@dataclass(frozen=True)
class TrajectoryRecord:
    """Trajectory columns as stored on disk."""

    times: np.ndarray
    detuning_norm: np.ndarray
    intensity_norm: np.ndarray
    pop_fraction: np.ndarray

    @property
    def output_dt(self) -> float:
        return float(self.times[1] - self.times[0])


def _write(path, columns, data: np.ndarray) -> None:
    path = Path(path)
    try:
        with path.open("w") as fh:
            fh.write(",".join(columns) + "\n")
            np.savetxt(fh, np.atleast_2d(data), fmt=FMT, delimiter=",")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _read(path, columns) -> np.ndarray:
    path = Path(path)
    try:
        with path.open() as fh:
            header = fh.readline().strip()
            got = tuple(c.strip() for c in header.split(","))
            if got != tuple(columns):
                raise ValueError(f"{path}: unexpected header {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if data.size == 0:
        return np.empty((0, len(columns)))
    if data.shape[1] != len(columns):
        raise ValueError(f"{path}: expected {len(columns)} columns, found {data.shape[1]}")
    return data


def write_trace(trace: ScanTrace, path) -> None:
    _write(path, TRACE_COLUMNS, np.column_stack([trace.detuning_norm, trace.intensity_norm]))


def read_trace(path) -> ScanTrace:
    data = _read(path, TRACE_COLUMNS)
    d = data[:, 0]
    direction = Direction.DECREASING if d.size > 1 and d[1] < d[0] else Direction.INCREASING
    return ScanTrace(direction, d, data[:, 1])


def write_trajectory(traj: Trajectory | TrajectoryRecord, path) -> None:
    if isinstance(traj, Trajectory):
        cols = [traj.times, traj.detuning_norm, traj.intensity, traj.pop_fraction]
    else:
        cols = [traj.times, traj.detuning_norm, traj.intensity_norm, traj.pop_fraction]
    _write(path, TRAJECTORY_COLUMNS, np.column_stack(cols))


def read_trajectory(path) -> TrajectoryRecord:
    data = _read(path, TRAJECTORY_COLUMNS)
    return TrajectoryRecord(*(data[:, k].copy() for k in range(4)))


def write_spectrogram(spec: Spectrogram, path) -> None:
    """Long format: one row per (time bin, frequency bin)."""
    t, f = np.meshgrid(spec.time_bins, spec.freq_bins, indexing="ij")
    _write(path, SPECTROGRAM_COLUMNS,
           np.column_stack([t.ravel(), f.ravel(), spec.magnitude.ravel()]))


def read_spectrogram(path) -> Spectrogram:
    """Rebuild the (time x frequency) grid; section levels are not stored."""
    data = _read(path, SPECTROGRAM_COLUMNS)
    times = np.unique(data[:, 0])
    freqs = np.unique(data[:, 1])
    if times.size * freqs.size != data.shape[0]:
        raise ValueError(f"{path}: rows do not form a full time x frequency grid")
    order = np.lexsort((data[:, 1], data[:, 0]))
    mag = data[order, 2].reshape(times.size, freqs.size)
    return Spectrogram(times, freqs, mag, np.full(times.size, np.nan), float("nan"))


def write_map(a_values, grid, raster: np.ndarray, path) -> None:
    a, d = np.meshgrid(np.asarray(a_values, float), np.asarray(grid, float), indexing="ij")
    _write(path, MAP_COLUMNS, np.column_stack([a.ravel(), d.ravel(), np.asarray(raster).ravel()]))
