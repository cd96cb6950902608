"""Run configuration files: a JSON document, schema-checked before any
compute.  Unknown keys are rejected so typos fail fast."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

MODES = ("calibrate", "simulate", "compare", "example-cd", "example-radiometer",
         "vertex-stress", "shock-stress")

_TOP_KEYS = {
    "mode", "scheme", "sigma2_E_grid", "sigma2_W_grid", "T", "n_reps", "M",
    "N_resample", "alpha_E", "seed", "x0_true", "shocks", "first_stage",
    "second_stage", "out_dir", "posterior_mode", "threads", "points",
    "drift_share", "long_window",
}

_SHOCK_KEYS = {"t_start", "t_len", "gamma", "sign_profile"}


@dataclass
class CampaignConfig:
    """Validated contents of a run configuration file."""

    mode: str
    scheme: tuple[float, ...] | None = None
    sigma2_E_grid: tuple[float, ...] = (1e-5, 1e-4, 1e-3)
    sigma2_W_grid: tuple[float, ...] = (5e-5, 1e-4, 1e-3)
    T: int = 1000
    n_reps: int = 100
    M: int = 500
    N_resample: int = 250
    alpha_E: float | None = None
    seed: int = 0
    x0_true: float = 65.0
    shocks: tuple[dict, ...] = ()
    first_stage: str | None = None
    second_stage: str | None = None
    out_dir: str | None = None
    posterior_mode: str = "slope_matched"
    threads: int | None = None
    points: int = 5
    drift_share: float = 0.9
    long_window: bool = False

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "sigma2_E_grid": list(self.sigma2_E_grid),
            "sigma2_W_grid": list(self.sigma2_W_grid),
            "T": self.T, "n_reps": self.n_reps, "M": self.M,
            "N_resample": self.N_resample, "alpha_E": self.alpha_E,
            "seed": self.seed, "x0_true": self.x0_true,
            "shocks": list(self.shocks),
            "first_stage": self.first_stage, "second_stage": self.second_stage,
            "out_dir": self.out_dir, "posterior_mode": self.posterior_mode,
            "threads": self.threads, "points": self.points,
            "drift_share": self.drift_share, "long_window": self.long_window,
        }
        if self.scheme is not None:
            d["scheme"] = list(self.scheme)
        return d


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def validate(raw: dict) -> CampaignConfig:
    """Schema-check a raw mapping and build the config."""
    _require(isinstance(raw, dict), "config root must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    _require("mode" in raw, "config must set 'mode'")
    mode = raw["mode"]
    _require(mode in MODES, f"mode must be one of {MODES}, got {mode!r}")

    cfg = CampaignConfig(mode=mode)
    if "scheme" in raw:
        scheme = raw["scheme"]
        _require(isinstance(scheme, list) and len(scheme) >= 2,
                 "'scheme' must be a list of at least 2 reference values")
        cfg.scheme = tuple(float(v) for v in scheme)
    for key in ("T", "n_reps", "M", "N_resample", "seed", "points"):
        if key in raw:
            _require(isinstance(raw[key], int) and not isinstance(raw[key], bool),
                     f"'{key}' must be an integer")
            setattr(cfg, key, raw[key])
    for key in ("alpha_E", "x0_true", "drift_share"):
        if key in raw and raw[key] is not None:
            _require(isinstance(raw[key], (int, float)),
                     f"'{key}' must be a number")
            setattr(cfg, key, float(raw[key]))
    for key in ("sigma2_E_grid", "sigma2_W_grid"):
        if key in raw:
            grid = raw[key]
            _require(isinstance(grid, list) and grid
                     and all(isinstance(v, (int, float)) for v in grid),
                     f"'{key}' must be a nonempty list of numbers")
            setattr(cfg, key, tuple(float(v) for v in grid))
    for key in ("first_stage", "second_stage", "out_dir", "posterior_mode"):
        if key in raw and raw[key] is not None:
            _require(isinstance(raw[key], str), f"'{key}' must be a string")
            setattr(cfg, key, raw[key])
    if "threads" in raw and raw["threads"] is not None:
        _require(isinstance(raw["threads"], int), "'threads' must be an integer")
        cfg.threads = raw["threads"]
    if "long_window" in raw:
        _require(isinstance(raw["long_window"], bool),
                 "'long_window' must be a boolean")
        cfg.long_window = raw["long_window"]
    if "shocks" in raw:
        shocks = raw["shocks"]
        _require(isinstance(shocks, list), "'shocks' must be a list")
        for s in shocks:
            _require(isinstance(s, dict), "each shock must be an object")
            unknown = set(s) - _SHOCK_KEYS
            _require(not unknown, f"unknown shock keys: {sorted(unknown)}")
            _require("t_start" in s and "t_len" in s,
                     "each shock needs 't_start' and 't_len'")
        cfg.shocks = tuple(shocks)

    _require(cfg.M >= cfg.N_resample >= 1,
             f"need M >= N_resample >= 1, got {cfg.M}, {cfg.N_resample}")
    _require(cfg.posterior_mode in ("slope_matched", "trace_reciprocal"),
             f"unknown posterior_mode {cfg.posterior_mode!r}")
    _require(cfg.points in (3, 5), "'points' must be 3 or 5")
    if mode == "calibrate":
        _require(cfg.first_stage is not None and cfg.second_stage is not None,
                 "calibrate mode needs 'first_stage' and 'second_stage' paths")
    return cfg


def load(path: str | Path) -> CampaignConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON ({path}): {exc}")
    return validate(raw)
