import json

import pytest

from spinann.config import ConfigError, RunConfig, load_config, parse_config


def test_empty_gives_defaults():
    cfg = parse_config({})
    m = cfg.material
    assert (m.Ms, m.alpha, m.A_ex, m.Ku2, m.D_dmi, m.theta_sh) == (7e5, 0.3, 1e-11, 4.8e5, -1.2e-3, 0.07)
    assert (m.t_fm, m.t_hm, m.rho_hm) == (0.6e-9, 3e-9, 200e-9)
    assert cfg.simulation.cell == (4e-9, 4e-9, 0.6e-9)
    assert cfg.network.sizes == (256, 20, 26)
    assert cfg.circuit.V_max == 0.1 and cfg.circuit.V_src == 0.65
    assert cfg.variation.sigma_3 == 0.2 and cfg.variation.trials == 100


def test_negative_ms_names_field():
    with pytest.raises(ConfigError, match=r"material\.Ms"):
        parse_config({"material": {"Ms": -1}})


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match=r"network\.hiden: Extra inputs"):
        parse_config({"network": {"hiden": 3}})
    with pytest.raises(ConfigError):
        parse_config({"bogus": {}})


def test_physical_cross_check():
    with pytest.raises(ConfigError, match="effective anisotropy"):
        parse_config({"material": {"Ku2": 1e5}})


def test_unsorted_sweep_rejected():
    with pytest.raises(ConfigError, match="ascending"):
        parse_config({"simulation": {"sweep_j": [1e11, 0.0]}})


def test_round_trip_idempotent(tmp_path):
    cfg = parse_config({"seed": 3, "network": {"epochs": 7}})
    p = tmp_path / "c.json"
    p.write_text(cfg.to_json())
    again = load_config(p)
    assert again == cfg and again.to_json() == cfg.to_json()
    assert again.digest() == cfg.digest()


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text(json.dumps([1, 2]))
    with pytest.raises(ConfigError):
        load_config(arr)


def test_frozen():
    cfg = RunConfig()
    with pytest.raises(Exception):
        cfg.seed = 2
