import json

import pytest

from monotone_sme import config
from monotone_sme.errors import ConfigError


@pytest.mark.parametrize("name", ["threshold", "log-growth", "adoption"])
def test_normalize_idempotent(name):
    cfg = config.normalize({"model": {"name": name}})
    again = config.normalize(json.loads(config.dumps(cfg)))
    assert again == cfg


def test_defaults_are_explicit():
    cfg = config.normalize({})
    assert cfg["estimation"]["distance"]["weights"] == "bootstrap"
    assert cfg["theta_box"]["lower"] == [-0.5]
    assert cfg["simulate"]["theta"] == [0.0]
    assert cfg["seeds"] == {"data_seed": 1, "sim_seed": 2, "oracle_seed": 3}


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        config.normalize({"modle": {}})
    with pytest.raises(ConfigError, match="estimation.search"):
        config.normalize({"estimation": {"search": {"pionts": 5}}})


def test_bad_theta_names_field():
    with pytest.raises(ConfigError, match="simulate.theta"):
        config.normalize({"simulate": {"theta": [3.0]}})


def test_explicit_weights_and_override_seed():
    cfg = config.normalize({"model": {"name": "log-growth"},
                            "estimation": {"distance": {"names": ["mean"], "weights": [2.0]}}})
    assert config.build_distance(cfg).weights == (2.0,)
    seeded = config.override_seed(cfg, 10)
    assert seeded["seeds"] == {"data_seed": 10, "sim_seed": 11, "oracle_seed": 12}
    assert cfg["seeds"]["data_seed"] == 1


def test_load_reads_manifest_config(tmp_path):
    cfg = config.normalize({"model": {"name": "log-growth"}})
    f = tmp_path / "manifest.json"
    f.write_text(json.dumps({"tool": "monotone_sme", "config": cfg}))
    assert config.load(f) == cfg
    with pytest.raises(ConfigError):
        config.load(tmp_path / "missing.json")
