import json

import pytest

from dyncal.config import CampaignConfig, load, validate
from dyncal.errors import ConfigError


def test_minimal_simulate_config():
    cfg = validate({"mode": "simulate"})
    assert cfg.mode == "simulate"
    assert cfg.M >= cfg.N_resample >= 1


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        validate({"mode": "simulate", "sigma_E": [1e-4]})


def test_unknown_mode_rejected():
    with pytest.raises(ConfigError, match="mode must be one of"):
        validate({"mode": "frobnicate"})


def test_missing_mode_rejected():
    with pytest.raises(ConfigError):
        validate({})


def test_calibrate_requires_paths():
    with pytest.raises(ConfigError, match="first_stage"):
        validate({"mode": "calibrate"})


def test_resample_bound():
    with pytest.raises(ConfigError, match="M >= N_resample"):
        validate({"mode": "simulate", "M": 10, "N_resample": 20})


def test_bool_is_not_an_integer():
    with pytest.raises(ConfigError, match="'T' must be an integer"):
        validate({"mode": "simulate", "T": True})


def test_shock_schema():
    cfg = validate({"mode": "shock-stress",
                    "shocks": [{"t_start": 10, "t_len": 5, "gamma": 2.0}]})
    assert cfg.shocks[0]["t_start"] == 10
    with pytest.raises(ConfigError, match="unknown shock keys"):
        validate({"mode": "shock-stress", "shocks": [{"start": 1, "t_len": 2}]})
    with pytest.raises(ConfigError, match="t_start"):
        validate({"mode": "shock-stress", "shocks": [{"t_len": 2}]})


def test_posterior_mode_checked():
    with pytest.raises(ConfigError, match="posterior_mode"):
        validate({"mode": "simulate", "posterior_mode": "magic"})


def test_round_trip_through_to_dict():
    cfg = validate({"mode": "simulate", "scheme": [20, 90, 100],
                    "sigma2_E_grid": [1e-4], "T": 50, "seed": 9})
    again = validate(cfg.to_dict())
    assert again == cfg


def test_load_reports_bad_json(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load(p)
    with pytest.raises(ConfigError, match="not found"):
        load(tmp_path / "missing.json")


def test_load_valid_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"mode": "compare", "T": 123}))
    cfg = load(p)
    assert isinstance(cfg, CampaignConfig)
    assert cfg.T == 123
