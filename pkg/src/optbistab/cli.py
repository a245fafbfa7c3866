"""Command-line front end.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, csvio
from .config import ConfigError, RunConfig, load_config
from .dynamics import ChirpSpec, IntegrationError, NormalizedState, integrate
from .params import derive_A, derive_S
from .steady import (DegenerateCubicError, Direction, bistable_region, hysteresis_scan,
                     steady_roots, tilt_map)

log = logging.getLogger("optbistab")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _kv(items: dict) -> str:
    lines = []
    for k, v in items.items():
        lines.append(f"{k} = {v:.9g}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(lines)


def _model_overrides(cfg: RunConfig, args) -> RunConfig:
    a = getattr(args, "a", None)
    s = getattr(args, "s", None)
    sign = getattr(args, "shift_sign", None)
    n_atoms = getattr(args, "n_atoms", None)
    pump = getattr(args, "pump_power_w", None)
    if a is not None and n_atoms is not None:
        raise ConfigError("give either --a or --n-atoms, not both")
    if s is not None and pump is not None:
        raise ConfigError("give either --s or --pump-power-w, not both")
    if n_atoms is not None or pump is not None:
        phys = replace(cfg.physical,
                       n_atoms=cfg.physical.n_atoms if n_atoms is None else n_atoms,
                       pump_power=cfg.physical.pump_power if pump is None else pump)
        a = derive_A(phys) if n_atoms is not None else a
        s = derive_S(phys) if pump is not None else s
        cfg = replace(cfg, physical=phys)
    return cfg.with_model(a, s, sign)


def _scan_grid(cfg: RunConfig, args) -> np.ndarray:
    start = cfg.scan.start if args.start is None else args.start
    end = cfg.scan.end if args.end is None else args.end
    points = cfg.scan.points if args.points is None else args.points
    if points < 1:
        raise ConfigError("scan grid must be non-empty")
    return np.linspace(min(start, end), max(start, end), points)


def cmd_params(cfg: RunConfig, args) -> int:
    cfg = _model_overrides(cfg, args)
    print(_kv(cfg.derived()))
    return 0


def cmd_steady(cfg: RunConfig, args) -> int:
    cfg = _model_overrides(cfg, args)
    sol = steady_roots(args.detuning, cfg.model, cfg.physical)
    if args.format == "csv":
        print("detuning_norm [kappa/2],intensity_norm [1],stable")
        for r in sol.roots:
            print(f"{sol.detuning_norm:.9g},{r.intensity_norm:.9g},{int(r.stable)}")
    else:
        print(f"detuning_norm = {sol.detuning_norm:.9g}  (A = {cfg.model.a_param:.6g}, "
              f"S = {cfg.model.s_param:.6g}, {cfg.model.shift_sign.value})")
        for k, r in enumerate(sol.roots):
            kind = "stable" if r.stable else ("saddle" if r.saddle else "oscillatory")
            print(f"  root {k}: intensity_norm = {r.intensity_norm:.9g}  {kind}")
    return 0


def cmd_region(cfg: RunConfig, args) -> int:
    cfg = _model_overrides(cfg, args)
    region = bistable_region(cfg.model, (args.search_min, args.search_max))
    if region is None:
        print("bistable = no")
    else:
        print(_kv({"bistable": "yes", "lower": region.lower, "upper": region.upper,
                   "width": region.width}))
    return 0


def cmd_scan(cfg: RunConfig, args) -> int:
    cfg = _model_overrides(cfg, args)
    grid = _scan_grid(cfg, args)
    direction = args.direction or cfg.scan.direction
    noise = cfg.scan.noise_rms if args.noise_rms is None else args.noise_rms
    rng = np.random.default_rng(args.seed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = ["increasing", "decreasing"] if direction == "both" else [direction]
    for name in wanted:
        g = grid if name == "increasing" else grid[::-1]
        trace = hysteresis_scan(g, name, cfg.model, cfg.physical)
        if cfg.analysis.average_window > 1:
            trace = analysis.average_trace(trace, cfg.analysis.average_window)
        if noise > 0:
            trace = type(trace)(trace.direction, trace.detuning_norm,
                                trace.intensity_norm + rng.normal(0, noise, len(trace)))
        path = out / f"scan_{name}.csv"
        csvio.write_trace(trace, path)
        print(f"wrote {path}")
    return 0


def cmd_map(cfg: RunConfig, args) -> int:
    cfg = _model_overrides(cfg, args)
    grid = _scan_grid(cfg, args)
    a_values = np.linspace(0.0, args.a_max, args.a_points)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("increasing", "decreasing"):
        raster = tilt_map(a_values, grid, cfg.model.s_param, name, cfg.model.shift_sign,
                          cfg.physical)
        path = out / f"map_{name}.csv"
        csvio.write_map(a_values, grid, raster, path)
        print(f"wrote {path}")
    return 0


def cmd_dynamics(cfg: RunConfig, args) -> int:
    cfg = _model_overrides(cfg, args)
    dyn = cfg.dynamics
    chirp = ChirpSpec(dyn.chirp.start if args.chirp_start is None else args.chirp_start,
                      dyn.chirp.end if args.chirp_end is None else args.chirp_end,
                      dyn.chirp.duration if args.duration_s is None else args.duration_s)
    fixed = args.fixed_detuning if args.fixed_detuning is not None else dyn.fixed_detuning
    output_dt = dyn.output_dt if args.output_dt_s is None else args.output_dt_s
    method = args.method or dyn.method
    t_end = args.t_end_s if args.t_end_s is not None else dyn.t_end
    drive = chirp if fixed is None else fixed
    if fixed is not None and t_end is None:
        t_end = chirp.duration
    traj = integrate(NormalizedState.dark(), drive, cfg.model, cfg.physical,
                     t_end=t_end, output_dt=output_dt, method=method)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (args.output or "trajectory.csv")
    csvio.write_trajectory(traj, path)
    print(f"wrote {path} ({len(traj.times)} samples, A = {cfg.model.a_param:.6g}, "
          f"S = {cfg.model.s_param:.6g})")
    return 0


def cmd_spectrogram(cfg: RunConfig, args) -> int:
    rec = csvio.read_trajectory(args.input)
    window = args.window or cfg.analysis.window
    hop = args.hop or cfg.analysis.hop
    spec = analysis.stft(rec.intensity_norm, rec.output_dt, window, hop)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / (args.output or "spectrogram.csv")
    csvio.write_spectrogram(spec, path)
    times, freqs = analysis.dominant_frequency(spec, cfg.analysis.band)
    found = freqs[np.isfinite(freqs)]
    print(f"wrote {path} ({spec.magnitude.shape[0]} x {spec.magnitude.shape[1]} bins)")
    if found.size:
        print(f"dominant frequency: {found.min() / 1e3:.1f} .. {found.max() / 1e3:.1f} kHz "
              f"in {found.size}/{freqs.size} time bins")
    else:
        print("dominant frequency: no oscillation")
    return 0


def cmd_fit(cfg: RunConfig, args) -> int:
    up = csvio.read_trace(args.up)
    down = csvio.read_trace(args.down)
    if up.direction is Direction.DECREASING:
        up, down = down, up
    a_bounds = (args.a_min if args.a_min is not None else cfg.analysis.a_bounds[0],
                args.a_max if args.a_max is not None else cfg.analysis.a_bounds[1])
    s_bounds = (args.s_min if args.s_min is not None else cfg.analysis.s_bounds[0],
                args.s_max if args.s_max is not None else cfg.analysis.s_bounds[1])
    sign = args.shift_sign or cfg.model.shift_sign
    res = analysis.fit_model(up, down, a_bounds, s_bounds, sign,
                             physical=cfg.physical if args.seed_from_physical else None,
                             stability_params=cfg.physical)
    result = {"a_fit": res.a_est, "s_fit": res.s_est, "residual_rms": res.residual_rms,
              "converged": str(res.converged).lower(), "iterations": res.iterations,
              "a_physical": derive_A(cfg.physical), "s_physical": derive_S(cfg.physical)}
    print("Fit of the steady-state model to the scan pair")
    print(f"  A = {res.a_est:.6f}   (from physical parameters: {result['a_physical']:.4g})")
    print(f"  S = {res.s_est:.6f}   (from physical parameters: {result['s_physical']:.4g})")
    print(f"  residual rms = {res.residual_rms:.3g}, converged = {res.converged}")
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "fit.txt"
    path.write_text(_kv(result) + "\n")
    print(f"wrote {path}")
    return 0


def _add_model_flags(p: argparse.ArgumentParser, physical: bool = False) -> None:
    p.add_argument("--a", type=float, help="interaction strength A (overrides config)")
    p.add_argument("--s", type=float, help="saturation parameter S (overrides config)")
    p.add_argument("--shift-sign", choices=["as_written", "figure_convention"])
    if physical:
        p.add_argument("--n-atoms", type=float, help="atom number; A is derived from it")
        p.add_argument("--pump-power-w", type=float, help="pump power (W); S is derived")


def _add_grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--start", type=float, help="first detuning (kappa/2 units)")
    p.add_argument("--end", type=float, help="last detuning (kappa/2 units)")
    p.add_argument("--points", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optbistab", description="Dispersive optical bistability of a saturable atomic medium")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--output-dir", default=".", help="directory for output files")
    parser.add_argument("--seed", type=int, default=None, help="seed for synthetic noise")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="echo physical and derived model parameters")
    _add_model_flags(p, physical=True)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("steady", help="steady states at one detuning")
    p.add_argument("--detuning", type=float, required=True)
    p.add_argument("--format", choices=["text", "csv"], default="text")
    _add_model_flags(p, physical=True)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("region", help="bistable detuning interval")
    p.add_argument("--search-min", type=float, default=-100.0)
    p.add_argument("--search-max", type=float, default=100.0)
    _add_model_flags(p, physical=True)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("scan", help="hysteresis scans written as CSV")
    _add_grid_flags(p)
    p.add_argument("--direction", choices=["increasing", "decreasing", "both"])
    p.add_argument("--noise-rms", type=float, help="additive Gaussian intensity noise")
    _add_model_flags(p, physical=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("map", help="scan raster over A = 0..a_max")
    _add_grid_flags(p)
    p.add_argument("--a-max", type=float, default=60.0)
    p.add_argument("--a-points", type=int, default=200)
    _add_model_flags(p, physical=True)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("dynamics", help="time-domain integration")
    p.add_argument("--chirp-start", type=float)
    p.add_argument("--chirp-end", type=float)
    p.add_argument("--duration-s", type=float)
    p.add_argument("--fixed-detuning", type=float, help="hold this detuning instead of chirping")
    p.add_argument("--t-end-s", type=float)
    p.add_argument("--output-dt-s", type=float)
    p.add_argument("--method", choices=["rk45", "rk4"])
    p.add_argument("--output", help="file name inside the output directory")
    _add_model_flags(p, physical=True)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("spectrogram", help="STFT of a trajectory CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--window", type=int)
    p.add_argument("--hop", type=int)
    p.add_argument("--output", help="file name inside the output directory")
    p.set_defaults(func=cmd_spectrogram)

    p = sub.add_parser("fit", help="fit A and S to an up/down trace pair")
    p.add_argument("--up", required=True)
    p.add_argument("--down", required=True)
    p.add_argument("--a-min", type=float)
    p.add_argument("--a-max", type=float)
    p.add_argument("--s-min", type=float)
    p.add_argument("--s-max", type=float)
    p.add_argument("--shift-sign", choices=["as_written", "figure_convention"])
    p.add_argument("--seed-from-physical", action="store_true",
                   help="start from A, S derived from the physical parameters")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        log.debug("configuration: %s", cfg.derived())
        return args.func(cfg, args)
    # LinAlgError subclasses ValueError, so it has to be caught first
    except (DegenerateCubicError, IntegrationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
