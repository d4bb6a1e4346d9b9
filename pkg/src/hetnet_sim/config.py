"""YAML scenario files: parsing with defaults and validation, and emission."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .association import DEFAULT_FADING_CAP, DownlinkPolicy, UplinkPolicy, UplinkPowerRule
from .engine import ScenarioConfig
from .geometry import Region
from .propagation import PathLossModel, TierConfig
from .sweep import default_bias_grid, default_femto_densities


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


TABLE_MODELS = (
    PathLossModel.single_slope(2.0),
    PathLossModel.single_slope(3.0),
    PathLossModel.dual_slope(2.0, 2.0),
    PathLossModel.dual_slope(2.0, 4.0),
    PathLossModel.dual_slope(3.0, 3.0),
    PathLossModel.dual_slope(3.0, 4.0),
)


@dataclass(frozen=True)
class SweepSettings:
    bias_grid_db: tuple[float, ...] = field(default_factory=default_bias_grid)
    femto_densities: tuple[float, ...] = field(default_factory=default_femto_densities)
    macro_densities: tuple[float, ...] = tuple(float(x) for x in np.logspace(-2.0, 1.5, 8))
    ratio: float = 10.0
    path_loss_models: tuple[PathLossModel, ...] = TABLE_MODELS


_TOP_KEYS = {"region", "tiers", "user_density_per_km2", "path_loss", "noise_dbm", "downlink", "uplink",
             "shared_fading", "n_drops", "seed", "fading_cap", "sweep"}


def _section(raw, key) -> dict:
    val = raw.get(key, {})
    if val is None:
        return {}
    if not isinstance(val, dict):
        raise ConfigError(key, "expected a mapping")
    return val


def _no_extra(d: dict, allowed, prefix: str):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{prefix}{k}", "unknown key")


def _num(d: dict, key: str, default, prefix: str, *, lo=None, lo_open=False, integer=False):
    full = f"{prefix}{key}"
    val = d.get(key, default)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(full, f"expected a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(full, f"expected an integer, got {val!r}")
    val = int(val) if integer else float(val)
    if not math.isfinite(val):
        raise ConfigError(full, "must be finite")
    if lo is not None and (val <= lo if lo_open else val < lo):
        raise ConfigError(full, f"must be {'>' if lo_open else '>='} {lo}, got {val}")
    return val


def _num_list(d: dict, key: str, default, prefix: str, *, positive=True):
    full = f"{prefix}{key}"
    val = d.get(key, default)
    if not isinstance(val, (list, tuple)) or not val:
        raise ConfigError(full, "expected a non-empty list of numbers")
    out = tuple(_num({key: v}, key, None, prefix, lo=0.0 if positive else None, lo_open=positive) for v in val)
    return out


def _path_loss(d: dict, prefix: str) -> PathLossModel:
    _no_extra(d, {"model", "alpha", "alpha0", "alpha1", "critical_radius_m", "reference_distance_m", "k"}, prefix)
    kind = d.get("model", "single")
    d0 = _num(d, "reference_distance_m", 100.0, prefix, lo=0.0, lo_open=True)
    k = _num(d, "k", 1.0, prefix, lo=0.0, lo_open=True)
    if kind == "single":
        alpha = _num(d, "alpha", 3.0, prefix, lo=0.0)
        return PathLossModel.single_slope(alpha, d0, k)
    if kind == "dual":
        a0 = _num(d, "alpha0", 3.0, prefix, lo=0.0)
        a1 = _num(d, "alpha1", 4.0, prefix, lo=0.0)
        rc = _num(d, "critical_radius_m", 30.0, prefix, lo=0.0, lo_open=True)
        return PathLossModel.dual_slope(a0, a1, rc, d0, k)
    raise ConfigError(f"{prefix}model", f"expected 'single' or 'dual', got {kind!r}")


def path_loss_to_dict(m: PathLossModel) -> dict:
    if m.is_dual:
        return {"model": "dual", "alpha0": m.alpha0, "alpha1": m.alpha1, "critical_radius_m": m.critical_radius,
                "reference_distance_m": m.reference_distance, "k": m.k}
    return {"model": "single", "alpha": m.alpha0, "reference_distance_m": m.reference_distance, "k": m.k}


def config_from_dict(raw) -> tuple[ScenarioConfig, SweepSettings]:
    """Build a scenario and sweep settings, filling omitted keys with the defaults."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("", "top level must be a mapping")
    _no_extra(raw, _TOP_KEYS, "")

    region = _section(raw, "region")
    _no_extra(region, {"half_width_km"}, "region.")
    g = _num(region, "half_width_km", 10.0, "region.", lo=0.0, lo_open=True)

    tiers_raw = _section(raw, "tiers")
    _no_extra(tiers_raw, {"macro", "femto"}, "tiers.")
    tiers = []
    for band, (name, dens, power) in enumerate((("macro", 1.0, 46.0), ("femto", 10.0, 23.0))):
        t = _section(tiers_raw, name)
        p = f"tiers.{name}."
        _no_extra(t, {"density_per_km2", "tx_power_dbm"}, p)
        tiers.append(TierConfig(name, _num(t, "density_per_km2", dens, p, lo=0.0), _num(t, "tx_power_dbm", power, p),
                                band))

    dl = _section(raw, "downlink")
    _no_extra(dl, {"macro_bias_db", "femto_bias_db"}, "downlink.")
    biases = (_num(dl, "macro_bias_db", 0.0, "downlink."), _num(dl, "femto_bias_db", 0.0, "downlink."))

    ul = _section(raw, "uplink")
    _no_extra(ul, {"policy", "target_rx_dbm", "max_tx_dbm"}, "uplink.")
    try:
        policy = UplinkPolicy(ul.get("policy", "decoupled"))
    except ValueError:
        raise ConfigError("uplink.policy", f"expected 'coupled' or 'decoupled', got {ul.get('policy')!r}") from None
    rule = UplinkPowerRule(_num(ul, "target_rx_dbm", -70.0, "uplink."), _num(ul, "max_tx_dbm", 20.0, "uplink."))

    shared = raw.get("shared_fading", True)
    if not isinstance(shared, bool):
        raise ConfigError("shared_fading", f"expected true or false, got {shared!r}")
    seed = _num(raw, "seed", 0, "", lo=0, integer=True)
    if seed >= 2 ** 64:
        raise ConfigError("seed", "must be below 2**64")

    cfg = ScenarioConfig(
        region=Region(g),
        tiers=tuple(tiers),
        user_density=_num(raw, "user_density_per_km2", 200.0, "", lo=0.0),
        path_loss=_path_loss(_section(raw, "path_loss"), "path_loss."),
        noise_dbm=_num(raw, "noise_dbm", -10.0, ""),
        downlink=DownlinkPolicy(biases),
        uplink=policy,
        power_rule=rule,
        n_drops=_num(raw, "n_drops", 2000, "", lo=1, integer=True),
        master_seed=seed,
        shared_fading=shared,
        fading_cap=_num(raw, "fading_cap", DEFAULT_FADING_CAP, "", lo=0.0, lo_open=True),
    )

    sw = _section(raw, "sweep")
    _no_extra(sw, {"bias_grid_db", "femto_densities_per_km2", "macro_densities_per_km2", "ratio",
                   "path_loss_models"}, "sweep.")
    defaults = SweepSettings()
    grid = _num_list(sw, "bias_grid_db", list(defaults.bias_grid_db), "sweep.", positive=False)
    if any(b >= a for a, b in zip(grid[1:], grid)):
        raise ConfigError("sweep.bias_grid_db", "must be strictly increasing")
    models_raw = sw.get("path_loss_models")
    if models_raw is None:
        models = defaults.path_loss_models
    else:
        if not isinstance(models_raw, list) or not models_raw:
            raise ConfigError("sweep.path_loss_models", "expected a non-empty list of path loss mappings")
        models = tuple(_path_loss(m if isinstance(m, dict) else {}, f"sweep.path_loss_models[{i}].")
                       for i, m in enumerate(models_raw))
    settings = SweepSettings(
        bias_grid_db=grid,
        femto_densities=_num_list(sw, "femto_densities_per_km2", list(defaults.femto_densities), "sweep."),
        macro_densities=_num_list(sw, "macro_densities_per_km2", list(defaults.macro_densities), "sweep."),
        ratio=_num(sw, "ratio", defaults.ratio, "sweep.", lo=0.0, lo_open=True),
        path_loss_models=models,
    )
    return cfg, settings


def config_to_dict(cfg: ScenarioConfig, settings: SweepSettings | None = None) -> dict:
    macro, femto = cfg.tiers[0], cfg.tiers[1]
    out = {
        "region": {"half_width_km": cfg.region.half_width_km},
        "tiers": {
            "macro": {"density_per_km2": macro.density, "tx_power_dbm": macro.tx_power_dbm},
            "femto": {"density_per_km2": femto.density, "tx_power_dbm": femto.tx_power_dbm},
        },
        "user_density_per_km2": cfg.user_density,
        "path_loss": path_loss_to_dict(cfg.path_loss),
        "noise_dbm": cfg.noise_dbm,
        "downlink": {"macro_bias_db": cfg.downlink.bias_db(0), "femto_bias_db": cfg.downlink.bias_db(1)},
        "uplink": {"policy": cfg.uplink.value, "target_rx_dbm": cfg.power_rule.target_rx_dbm,
                   "max_tx_dbm": cfg.power_rule.max_tx_dbm},
        "shared_fading": cfg.shared_fading,
        "n_drops": cfg.n_drops,
        "seed": cfg.master_seed,
        "fading_cap": cfg.fading_cap,
    }
    if settings is not None:
        out["sweep"] = {
            "bias_grid_db": list(settings.bias_grid_db),
            "femto_densities_per_km2": list(settings.femto_densities),
            "macro_densities_per_km2": list(settings.macro_densities),
            "ratio": settings.ratio,
            "path_loss_models": [path_loss_to_dict(m) for m in settings.path_loss_models],
        }
    return out


def parse_config(path) -> tuple[ScenarioConfig, SweepSettings]:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError("", f"cannot read config file {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"malformed YAML in {path}: {exc}") from None
    return config_from_dict(raw)


def dump_config(cfg: ScenarioConfig, settings: SweepSettings | None = None) -> str:
    return yaml.safe_dump(config_to_dict(cfg, settings), sort_keys=False)
