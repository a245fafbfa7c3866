"""INI-style run configuration with explicit unit suffixes.

Sections: ``[physical]``, ``[model]``, ``[scan]``, ``[dynamics]``,
``[analysis]``. Dimensional keys carry their unit in the key name
(``_hz``, ``_s``, ``_w``, ``_m``, ``_w_m2``); frequencies given in Hz are
cyclic and converted to rad/s on load. Normalized detunings are in units
of kappa/2 and carry no suffix.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dynamics import DEFAULT_OUTPUT_DT, ChirpSpec
from .params import (TWO_PI, ModelParams, PhysicalParams, ShiftSign, derive_A, derive_S)


class ConfigError(ValueError):
    pass


# key -> (PhysicalParams attribute, multiplier)
_PHYSICAL = {
    "kappa_hz": ("kappa", TWO_PI),
    "gamma_hz": ("gamma", TWO_PI),
    "g0_hz": ("g0", TWO_PI),
    "delta_ca_hz": ("delta_ca", TWO_PI),
    "n_atoms": ("n_atoms", 1.0),
    "i_sat_w_m2": ("i_sat", 1.0),
    "pump_power_w": ("pump_power", 1.0),
    "waist_m": ("waist", 1.0),
    "mirror_t": ("mirror_T", 1.0),
    "mirror_r": ("mirror_R", 1.0),
    "enhancement_g": ("enhancement_G", 1.0),
    "intensity_calibration": ("intensity_calibration", 1.0),
}
_MODEL = {"a_param", "s_param", "shift_sign", "detuned_saturation"}
_SCAN = {"start", "end", "points", "direction", "noise_rms"}
_DYNAMICS = {"chirp_start", "chirp_end", "duration_s", "output_dt_s", "method",
             "fixed_detuning", "t_end_s"}
_ANALYSIS = {"window", "hop", "average_window", "band_low_hz", "band_high_hz",
             "fit_a_min", "fit_a_max", "fit_s_min", "fit_s_max"}
_SECTIONS = {"physical": set(_PHYSICAL), "model": _MODEL, "scan": _SCAN,
             "dynamics": _DYNAMICS, "analysis": _ANALYSIS}
_SUFFIXES = ("_w_m2", "_hz", "_s", "_w", "_m")


@dataclass(frozen=True)
class ScanSpec:
    start: float = -10.0
    end: float = 20.0
    points: int = 301
    direction: str = "both"
    noise_rms: float = 0.0


@dataclass(frozen=True)
class DynamicsSpec:
    chirp: ChirpSpec = field(default_factory=lambda: ChirpSpec(50.0, -10.0, 68e-3))
    output_dt: float = DEFAULT_OUTPUT_DT
    method: str = "rk45"
    fixed_detuning: float | None = None
    t_end: float | None = None


@dataclass(frozen=True)
class AnalysisSpec:
    window: int = 256
    hop: int = 128
    average_window: int = 1
    band: tuple[float, float] = (20e3, 1e6)
    a_bounds: tuple[float, float] = (0.0, 60.0)
    s_bounds: tuple[float, float] = (0.0, 30.0)


@dataclass(frozen=True)
class RunConfig:
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    model: ModelParams | None = None
    a_overridden: bool = False
    s_overridden: bool = False
    scan: ScanSpec = field(default_factory=ScanSpec)
    dynamics: DynamicsSpec = field(default_factory=DynamicsSpec)
    analysis: AnalysisSpec = field(default_factory=AnalysisSpec)

    def __post_init__(self) -> None:
        if self.model is None:
            object.__setattr__(self, "model", ModelParams.from_physical(self.physical))

    def derived(self) -> dict[str, float | str]:
        """Derived quantities for echoing back to the user."""
        p = self.physical
        return {
            "tau_s": p.tau,
            "enhancement_g": p.enhancement_G,
            "input_intensity_w_m2": p.input_intensity,
            "i_sat_eff_w_m2": p.i_sat_eff,
            "a_physical": derive_A(p),
            "s_physical": derive_S(p),
            "a_param": self.model.a_param,
            "s_param": self.model.s_param,
            "a_source": "override" if self.a_overridden else "physical",
            "s_source": "override" if self.s_overridden else "physical",
            "shift_sign": self.model.shift_sign.value,
        }

    def with_model(self, a: float | None = None, s: float | None = None,
                   shift_sign: str | None = None) -> RunConfig:
        m = self.model
        return replace(
            self,
            model=ModelParams(m.a_param if a is None else a, m.s_param if s is None else s,
                              m.shift_sign if shift_sign is None else shift_sign,
                              m.detuned_saturation),
            a_overridden=self.a_overridden or a is not None,
            s_overridden=self.s_overridden or s is not None)


def _number(section: str, key: str, raw: str, kind=float):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def _bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")


def _check_keys(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        known = _SECTIONS[section]
        for key in parser[section]:
            if key in known:
                continue
            for good in known:
                stem = next((good[:-len(s)] for s in _SUFFIXES if good.endswith(s)), None)
                if stem and (key == stem or key.startswith(stem + "_")):
                    raise ConfigError(
                        f"[{section}] {key}: unit suffix missing or wrong, expected {good!r}")
            raise ConfigError(f"[{section}] unknown key {key!r}")


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable configuration: {exc}") from None
    _check_keys(parser)

    def get(section: str) -> dict[str, str]:
        return dict(parser[section]) if parser.has_section(section) else {}

    phys_raw, model_raw = get("physical"), get("model")
    for a, b in (("n_atoms", "a_param"), ("pump_power_w", "s_param")):
        if a in phys_raw and b in model_raw:
            raise ConfigError(f"both {a} and {b} given; supply exactly one")

    kwargs = {}
    for key, raw in phys_raw.items():
        attr, scale = _PHYSICAL[key]
        kwargs[attr] = _number("physical", key, raw) * scale
    try:
        physical = PhysicalParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[physical] {exc}") from None

    try:
        shift = ShiftSign(model_raw.get("shift_sign", ShiftSign.FIGURE_CONVENTION.value))
    except ValueError:
        raise ConfigError(f"[model] shift_sign: unknown value {model_raw['shift_sign']!r}") from None
    a = (_number("model", "a_param", model_raw["a_param"]) if "a_param" in model_raw
         else derive_A(physical))
    s = (_number("model", "s_param", model_raw["s_param"]) if "s_param" in model_raw
         else derive_S(physical))
    detuned = _bool("model", "detuned_saturation", model_raw.get("detuned_saturation", "true"))
    try:
        model = ModelParams(a, s, shift, detuned)
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None

    sc = get("scan")
    scan = ScanSpec(
        start=_number("scan", "start", sc.get("start", "-10")),
        end=_number("scan", "end", sc.get("end", "20")),
        points=_number("scan", "points", sc.get("points", "301"), int),
        direction=sc.get("direction", "both"),
        noise_rms=_number("scan", "noise_rms", sc.get("noise_rms", "0")))
    if scan.points < 1:
        raise ConfigError("[scan] points: grid must be non-empty")
    if scan.points > 1 and scan.start == scan.end:
        raise ConfigError("[scan] start and end must differ")
    if scan.direction not in ("increasing", "decreasing", "both"):
        raise ConfigError(f"[scan] direction: unknown value {scan.direction!r}")
    if scan.noise_rms < 0:
        raise ConfigError("[scan] noise_rms must be >= 0")

    dy = get("dynamics")
    try:
        chirp = ChirpSpec(_number("dynamics", "chirp_start", dy.get("chirp_start", "50")),
                          _number("dynamics", "chirp_end", dy.get("chirp_end", "-10")),
                          _number("dynamics", "duration_s", dy.get("duration_s", "0.068")))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[dynamics] {exc}") from None
    dynamics = DynamicsSpec(
        chirp=chirp,
        output_dt=_number("dynamics", "output_dt_s", dy.get("output_dt_s", str(DEFAULT_OUTPUT_DT))),
        method=dy.get("method", "rk45"),
        fixed_detuning=(_number("dynamics", "fixed_detuning", dy["fixed_detuning"])
                        if "fixed_detuning" in dy else None),
        t_end=_number("dynamics", "t_end_s", dy["t_end_s"]) if "t_end_s" in dy else None)
    if dynamics.method not in ("rk45", "rk4"):
        raise ConfigError(f"[dynamics] method: unknown value {dynamics.method!r}")
    if not dynamics.output_dt > 0:
        raise ConfigError("[dynamics] output_dt_s must be > 0")

    an = get("analysis")
    analysis = AnalysisSpec(
        window=_number("analysis", "window", an.get("window", "256"), int),
        hop=_number("analysis", "hop", an.get("hop", "128"), int),
        average_window=_number("analysis", "average_window", an.get("average_window", "1"), int),
        band=(_number("analysis", "band_low_hz", an.get("band_low_hz", "20e3")),
              _number("analysis", "band_high_hz", an.get("band_high_hz", "1e6"))),
        a_bounds=(_number("analysis", "fit_a_min", an.get("fit_a_min", "0")),
                  _number("analysis", "fit_a_max", an.get("fit_a_max", "60"))),
        s_bounds=(_number("analysis", "fit_s_min", an.get("fit_s_min", "0")),
                  _number("analysis", "fit_s_max", an.get("fit_s_max", "30"))))

    return RunConfig(physical, model, "a_param" in model_raw, "s_param" in model_raw,
                     scan, dynamics, analysis)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
