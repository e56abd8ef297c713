"""Scenario configuration: defaults, INI-style file loading, and the run manifest."""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

ESTIMATORS = ("ls", "lmmse", "vi-s", "vi-laplace")
MODES = ("blocks", "angle")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    # array
    n_bs: int = 16
    ris_h: int = 10
    ris_v: int = 10
    spacing: float = 0.5
    # protocol
    n_users: int = 3
    tau: int = 0  # 0 means tau = n_users
    m_rb: int = 2
    m_ur: int = 3
    # power and noise
    power_dbm: float = 23.0
    bandwidth_hz: float = 8e7
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 7.0
    noise_var_override: float | None = None
    lmmse_noise: str = "scaled"
    # geometry (meters)
    bs_pos: tuple[float, ...] = (0.0, 0.0)
    ris_pos: tuple[float, ...] = (350.0, 10.0)
    ue_center: tuple[float, ...] = (400.0, 0.0)
    ue_radius: float = 5.0
    # path loss
    mu0_db: float = -20.0
    d0: float = 1.0
    eta_rb: float = 2.2
    eta_ur: float = 2.1
    # angle sectors (radians)
    azimuth_range: tuple[float, ...] = (-math.pi / 3, math.pi / 3)
    elevation_range: tuple[float, ...] = (-math.pi / 6, math.pi / 6)
    aoa_range: tuple[float, ...] = (-math.pi / 3, math.pi / 3)
    # estimator
    hp_a: float = 1e-6
    hp_b: float = 1e-6
    tol: float = 1e-6
    max_iters: int = 200
    floor: float = 1e-30
    beta_cap: float = 1e12
    normalize: bool = True
    # sweep
    mode: str = "blocks"
    t_list: tuple[int, ...] = (2, 4, 6, 8, 10, 12)
    angle_t_list: tuple[int, ...] = (6,)
    delta2_list: tuple[float, ...] = (0.0, 1e-4, 1e-3, 1e-2, 1e-1)
    trials: int = 100
    seed: int = 20250101
    estimators: tuple[str, ...] = ESTIMATORS
    fast_path: bool = True
    workers: int = 1
    record_timing: bool = False

    def __post_init__(self):
        validate(self)

    @property
    def pilot_length(self) -> int:
        return self.tau or self.n_users

    @property
    def n_ris(self) -> int:
        return self.ris_h * self.ris_v

    def sweep_points(self) -> list[tuple[int, float]]:
        """(T, delta2) pairs visited by the configured mode, in output order."""
        if self.mode == "blocks":
            return [(t, 0.0) for t in self.t_list]
        return [(t, d) for t in self.angle_t_list for d in self.delta2_list]


SECTIONS = {
    "array": ("n_bs", "ris_h", "ris_v", "spacing"),
    "protocol": ("n_users", "tau", "m_rb", "m_ur"),
    "power": ("power_dbm", "bandwidth_hz", "noise_density_dbm_hz", "noise_figure_db",
              "noise_var_override", "lmmse_noise"),
    "geometry": ("bs_pos", "ris_pos", "ue_center", "ue_radius"),
    "pathloss": ("mu0_db", "d0", "eta_rb", "eta_ur"),
    "angles": ("azimuth_range", "elevation_range", "aoa_range"),
    "estimator": ("hp_a", "hp_b", "tol", "max_iters", "floor", "beta_cap", "normalize"),
    "sweep": ("mode", "t_list", "angle_t_list", "delta2_list", "trials", "seed", "estimators",
              "fast_path", "workers", "record_timing"),
}
_SECTION_OF = {key: sec for sec, keys in SECTIONS.items() for key in keys}
_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def validate(cfg: ScenarioConfig) -> None:
    counts = ("n_bs", "ris_h", "ris_v", "n_users", "m_rb", "m_ur", "trials", "max_iters", "workers")
    for name in counts:
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1")
    if cfg.tau and cfg.tau < cfg.n_users:
        raise ConfigError(f"tau={cfg.tau} must be >= n_users={cfg.n_users}")
    if cfg.spacing <= 0 or cfg.d0 <= 0 or cfg.ue_radius < 0:
        raise ConfigError("spacing and d0 must be positive, ue_radius non-negative")
    for name in ("power_dbm", "bandwidth_hz", "noise_density_dbm_hz", "noise_figure_db"):
        if not math.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite")
    if cfg.noise_var_override is not None and cfg.noise_var_override < 0:
        raise ConfigError("noise_var_override must be non-negative")
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if cfg.lmmse_noise not in ("scaled", "raw"):
        raise ConfigError("lmmse_noise must be 'scaled' or 'raw'")
    unknown = set(cfg.estimators) - set(ESTIMATORS)
    if unknown or not cfg.estimators:
        raise ConfigError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
    if any(t < 1 for t in cfg.t_list + cfg.angle_t_list):
        raise ConfigError("every T must be >= 1")
    if any(d < 0 for d in cfg.delta2_list):
        raise ConfigError("delta2 values must be non-negative")
    for name in ("bs_pos", "ris_pos", "ue_center", "azimuth_range", "elevation_range", "aoa_range"):
        if len(getattr(cfg, name)) != 2:
            raise ConfigError(f"{name} needs exactly two values")
    if cfg.hp_a < 0 or cfg.hp_b < 0:
        raise ConfigError("hyperpriors must be non-negative")


def _parse_value(name: str, text: str):
    default = _FIELDS[name].default
    text = text.strip()
    try:
        if name == "noise_var_override":
            return None if text.lower() in ("", "none", "auto") else float(text)
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if isinstance(default, tuple):
            items = [s.strip() for s in text.split(",") if s.strip()]
            kind = type(default[0])
            return tuple(kind(s) for s in items)
        return type(default)(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "on" if value else "off"
    if isinstance(value, tuple):
        return ", ".join(_format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def from_mapping(values: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Override ``base`` with string or typed values keyed by field name."""
    base = base or ScenarioConfig()
    parsed = {}
    for key, value in values.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        parsed[key] = _parse_value(key, value) if isinstance(value, str) else value
    try:
        return dataclasses.replace(base, **parsed)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> ScenarioConfig:
    values = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            for key, value in parser.items(section):
                if _SECTION_OF.get(key) != section:
                    raise ConfigError(f"unknown key {key!r} in section [{section}]")
                values[key] = value
    values.update(overrides or {})
    return from_mapping(values)


def dump_config(cfg: ScenarioConfig) -> str:
    """Fully resolved config in the same format :func:`load_config` reads."""
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        lines.extend(f"{key} = {_format_value(getattr(cfg, key))}" for key in keys)
        lines.append("")
    return "\n".join(lines)
