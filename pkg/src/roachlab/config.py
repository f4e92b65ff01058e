"""Flat INI-style run configuration: parsing, validation, normalised dump.

Five core sections ([model], [grid], [time], [ic], [output]) configure a
run; optional command sections ([linstab], [neutral_curve], [continuation],
[eps_sweep]) hold the knobs of the corresponding CLI subcommands.  Unknown
sections or keys are hard errors, and every validation error names its key.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields, replace

from roachlab.errors import ConfigError
from roachlab.model import ModelParams, SwitchingKind

SYSTEMS = ("rd3-conserved", "rd3-growth", "cross-limit")
NOISE_FIELDS = ("v", "u")
SPLITS = ("manifold", "half")


@dataclass(frozen=True)
class ICSpec:
    """Initial condition: constant state plus seeded noise and/or a cosine kick."""

    constant_level: float = 1.0
    noise_amplitude: float = 0.01
    noise_field: str = "v"
    seed: int | None = None
    cosine_mode: int = 0
    cosine_amplitude: float = 0.0
    cosine_field: str = "v"
    split: str = "manifold"


@dataclass(frozen=True)
class LinstabSpec:
    parameter_min: float = 0.5
    parameter_max: float = 2.0
    parameter_steps: int = 151
    n_max: int = 64


@dataclass(frozen=True)
class NeutralCurveSpec:
    modes: tuple = (1, 2, 3, 4, 5, 6, 7, 8)
    parameter_min: float = 0.5
    parameter_max: float = 2.0
    parameter_steps: int = 121
    D_min: float = 0.005
    D_max: float = 0.5
    D_scan: int = 100


@dataclass(frozen=True)
class ContinuationSpec:
    parameter_start: float = 1.0
    parameter_min: float = 0.5
    parameter_max: float = 1.5
    direction: int = 1
    ds0: float = 0.02
    ds_max: float = 0.05
    max_steps: int = 300
    kick_mode: int = 1
    kick_amplitude: float = 0.01
    warmup_t: float = 0.0


@dataclass(frozen=True)
class EpsSweepSpec:
    eps_values: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    t_end: float = 1.0
    dt: float = 2.5e-4


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one run."""

    system: str = "rd3-conserved"
    params: ModelParams = field(default_factory=ModelParams)
    grid_dim: int = 1
    grid_n: int = 256
    dt: float = 1e-3
    t_end: float = 10.0
    scheme: str = "imex-be"
    snapshots: tuple = ()
    series_stride: int = 1
    ic: ICSpec = field(default_factory=ICSpec)
    out_dir: str = "out"
    linstab: LinstabSpec = field(default_factory=LinstabSpec)
    neutral_curve: NeutralCurveSpec = field(default_factory=NeutralCurveSpec)
    continuation: ContinuationSpec = field(default_factory=ContinuationSpec)
    eps_sweep: EpsSweepSpec = field(default_factory=EpsSweepSpec)


def _parse_value(section: str, key: str, raw: str, kind):
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind is str:
            return raw.strip()
        if kind == "float_list":
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        if kind == "int_list":
            return tuple(int(tok) for tok in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind}") from None
    raise ConfigError(f"internal: unknown kind {kind}")  # pragma: no cover


_MODEL_KEYS = {
    "system": str, "d": float, "D": float, "D_v": float, "a1": float, "a2": float,
    "alpha": float, "beta": float, "eps": float, "gamma1": float, "gamma2": float,
    "v_star": float, "v_sharp": float, "L": float, "switching": str,
}
_GRID_KEYS = {"dim": int, "n": int}
_TIME_KEYS = {
    "dt": float, "t_end": float, "scheme": str,
    "snapshots": "float_list", "series_stride": int,
}
_IC_KEYS = {
    "constant_level": float, "noise_amplitude": float, "noise_field": str,
    "seed": int, "cosine_mode": int, "cosine_amplitude": float,
    "cosine_field": str, "split": str,
}
_OUTPUT_KEYS = {"dir": str}
_LINSTAB_KEYS = {
    "parameter_min": float, "parameter_max": float,
    "parameter_steps": int, "n_max": int,
}
_NEUTRAL_KEYS = {
    "modes": "int_list", "parameter_min": float, "parameter_max": float,
    "parameter_steps": int, "D_min": float, "D_max": float, "D_scan": int,
}
_CONT_KEYS = {
    "parameter_start": float, "parameter_min": float, "parameter_max": float,
    "direction": int, "ds0": float, "ds_max": float, "max_steps": int,
    "kick_mode": int, "kick_amplitude": float, "warmup_t": float,
}
_SWEEP_KEYS = {"eps_values": "float_list", "t_end": float, "dt": float}

_SECTIONS = {
    "model": _MODEL_KEYS,
    "grid": _GRID_KEYS,
    "time": _TIME_KEYS,
    "ic": _IC_KEYS,
    "output": _OUTPUT_KEYS,
    "linstab": _LINSTAB_KEYS,
    "neutral_curve": _NEUTRAL_KEYS,
    "continuation": _CONT_KEYS,
    "eps_sweep": _SWEEP_KEYS,
}


def _read_section(parser: configparser.ConfigParser, name: str) -> dict:
    if not parser.has_section(name):
        return {}
    keys = _SECTIONS[name]
    out = {}
    for key, raw in parser.items(name):
        if key not in keys:
            raise ConfigError(f"[{name}] unknown key {key!r}")
        out[key] = _parse_value(name, key, raw, keys[key])
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate an INI-style configuration document."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")

    model = _read_section(parser, "model")
    system = model.pop("system", "rd3-conserved")
    if system not in SYSTEMS:
        raise ConfigError(f"[model] system: must be one of {SYSTEMS}, got {system!r}")
    switching_raw = model.pop("switching", SwitchingKind.TANH_SUM.value)
    try:
        switching = SwitchingKind(switching_raw)
    except ValueError:
        raise ConfigError(
            f"[model] switching: must be one of "
            f"{[k.value for k in SwitchingKind]}, got {switching_raw!r}"
        ) from None
    try:
        params = ModelParams(switching=switching, **model)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[model] {exc}") from exc
    if system == "rd3-conserved" and (params.a1 != 0.0 or params.a2 != 0.0):
        raise ConfigError("[model] a1/a2: rd3-conserved requires a1 = a2 = 0")

    grid = _read_section(parser, "grid")
    grid_dim = grid.get("dim", 1)
    grid_n = grid.get("n", 256 if grid_dim == 1 else 128)
    if grid_dim not in (1, 2):
        raise ConfigError(f"[grid] dim: must be 1 or 2, got {grid_dim}")
    if grid_n < 8:
        raise ConfigError(f"[grid] n: must be at least 8, got {grid_n}")

    time_sec = _read_section(parser, "time")
    dt = time_sec.get("dt", 1e-3)
    t_end = time_sec.get("t_end", 10.0)
    scheme = time_sec.get("scheme", "imex-be")
    snapshots = tuple(time_sec.get("snapshots", ()))
    series_stride = time_sec.get("series_stride", 1)
    if dt <= 0:
        raise ConfigError(f"[time] dt: must be positive, got {dt}")
    if t_end <= 0:
        raise ConfigError(f"[time] t_end: must be positive, got {t_end}")
    if scheme not in ("imex-be", "imex-cn"):
        raise ConfigError(f"[time] scheme: must be imex-be or imex-cn, got {scheme!r}")
    if series_stride < 1:
        raise ConfigError(f"[time] series_stride: must be >= 1, got {series_stride}")
    for t in snapshots:
        if not (0.0 <= t <= t_end):
            raise ConfigError(f"[time] snapshots: {t} outside [0, t_end]")

    ic_sec = _read_section(parser, "ic")
    ic = ICSpec(
        constant_level=ic_sec.get("constant_level", 1.0),
        noise_amplitude=ic_sec.get("noise_amplitude", 0.01),
        noise_field=ic_sec.get("noise_field", "v"),
        seed=ic_sec.get("seed"),
        cosine_mode=ic_sec.get("cosine_mode", 0),
        cosine_amplitude=ic_sec.get("cosine_amplitude", 0.0),
        cosine_field=ic_sec.get("cosine_field", "v"),
        split=ic_sec.get("split", "manifold"),
    )
    if ic.constant_level <= 0:
        raise ConfigError(f"[ic] constant_level: must be positive, got {ic.constant_level}")
    if ic.noise_amplitude < 0:
        raise ConfigError("[ic] noise_amplitude: must be nonnegative")
    if ic.noise_field not in NOISE_FIELDS:
        raise ConfigError(f"[ic] noise_field: must be one of {NOISE_FIELDS}")
    if ic.cosine_field not in NOISE_FIELDS:
        raise ConfigError(f"[ic] cosine_field: must be one of {NOISE_FIELDS}")
    if ic.split not in SPLITS:
        raise ConfigError(f"[ic] split: must be one of {SPLITS}")
    if ic.noise_amplitude > 0 and ic.seed is None:
        raise ConfigError("[ic] seed: required when noise_amplitude > 0")

    out_dir = _read_section(parser, "output").get("dir", "out")

    return RunConfig(
        system=system,
        params=params,
        grid_dim=grid_dim,
        grid_n=grid_n,
        dt=dt,
        t_end=t_end,
        scheme=scheme,
        snapshots=snapshots,
        series_stride=series_stride,
        ic=ic,
        out_dir=out_dir,
        linstab=LinstabSpec(**_read_section(parser, "linstab")),
        neutral_curve=NeutralCurveSpec(
            **{
                k: (tuple(v) if k == "modes" else v)
                for k, v in _read_section(parser, "neutral_curve").items()
            }
        ),
        continuation=ContinuationSpec(**_read_section(parser, "continuation")),
        eps_sweep=EpsSweepSpec(
            **{
                k: (tuple(v) if k == "eps_values" else v)
                for k, v in _read_section(parser, "eps_sweep").items()
            }
        ),
    )


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def dump_config(config: RunConfig) -> str:
    """Normalised dump; ``parse_config(dump_config(c)) == c``."""
    p = config.params
    lines = ["[model]"]
    lines.append(f"system = {config.system}")
    for key in ("d", "D", "D_v", "a1", "a2", "alpha", "beta", "eps",
                "gamma1", "gamma2", "v_star", "v_sharp", "L"):
        lines.append(f"{key} = {_fmt(getattr(p, key))}")
    lines.append(f"switching = {p.switching.value}")
    lines.append("")
    lines.append("[grid]")
    lines.append(f"dim = {config.grid_dim}")
    lines.append(f"n = {config.grid_n}")
    lines.append("")
    lines.append("[time]")
    lines.append(f"dt = {_fmt(config.dt)}")
    lines.append(f"t_end = {_fmt(config.t_end)}")
    lines.append(f"scheme = {config.scheme}")
    if config.snapshots:
        lines.append(f"snapshots = {_fmt(config.snapshots)}")
    lines.append(f"series_stride = {config.series_stride}")
    lines.append("")
    lines.append("[ic]")
    for f in fields(ICSpec):
        value = getattr(config.ic, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {_fmt(value)}")
    lines.append("")
    lines.append("[output]")
    lines.append(f"dir = {config.out_dir}")
    for section, spec in (
        ("linstab", config.linstab),
        ("neutral_curve", config.neutral_curve),
        ("continuation", config.continuation),
        ("eps_sweep", config.eps_sweep),
    ):
        lines.append("")
        lines.append(f"[{section}]")
        for f in fields(spec):
            lines.append(f"{f.name} = {_fmt(getattr(spec, f.name))}")
    return "\n".join(lines) + "\n"


def override(config: RunConfig, out_dir: str | None = None, seed: int | None = None) -> RunConfig:
    """Apply CLI-level overrides."""
    if out_dir is not None:
        config = replace(config, out_dir=out_dir)
    if seed is not None:
        config = replace(config, ic=replace(config.ic, seed=seed))
    return config
