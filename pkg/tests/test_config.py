import pytest

from extfock.config import (
    ORACLE_DEFAULTS, PRESETS, ConfigError, load_config, load_preset, parse_config,
)

MODEL = {"name": "m", "d": 3, "theta": "0.5*pow(2)", "omega": "pow(1)", "v": "pow(-1/2)"}


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name):
    cfg = load_preset(name)
    assert cfg.model.name
    assert set(cfg.oracle) == set(ORACLE_DEFAULTS)


def test_theta1_defaults_to_theta():
    cfg = parse_config({"model": MODEL})
    assert cfg.model.theta1 == cfg.model.theta
    assert cfg.oracle_keys == ()


def test_oracle_overrides_recorded():
    cfg = parse_config({"model": MODEL, "oracle": {"modes": 6}})
    assert cfg.oracle["modes"] == 6 and cfg.oracle_keys == ("modes",)


@pytest.mark.parametrize("data", [
    {},
    {"model": {k: v for k, v in MODEL.items() if k != "v"}},
    {"model": {**MODEL, "omega": "pow("}},
    {"model": MODEL, "oracle": {"nmax": 3}},
    {"model": MODEL, "output": {"format": "yaml"}},
])
def test_bad_configs(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_file_and_preset_lookup(tmp_path):
    p = tmp_path / "m.toml"
    p.write_text('[model]\nname = "m"\nd = 3\ntheta = "0.5*pow(2)"\nomega = "pow(1)"\nv = "pow(-1/2)"\n')
    assert load_config(p).model.name == "m"
    assert load_config("frohlich").model.name == load_preset("frohlich").model.name
    assert load_config("dipole.toml").model.d == 3


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[model\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_preset("yukawa")
