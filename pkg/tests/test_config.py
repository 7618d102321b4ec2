import pytest

from rtis.config import CollectConfig, Config, config_from_dict, load_config
from rtis.errors import ConfigError
from rtis.timestep import Variant


def test_defaults():
    cfg = load_config(None)
    assert cfg.collect.n_trials == 50 and cfg.collect.n_steps == 10_000
    assert cfg.eval.n_trials == 100
    assert cfg.ppo.gamma == 0.99 and cfg.ppo.hidden == (128, 64)
    assert cfg.env.goal == (0.4, 0.2, 0.5)


def test_yaml_overrides(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("timestep:\n  variant: jitter\n  jitter_cv: 0.2\nppo:\n  epochs: 7\n"
                 "collect:\n  n_trials: 3\n  synthetic_cpu: [1, 2]\n")
    cfg = load_config(p)
    assert cfg.timestep.variant is Variant.JITTER and cfg.timestep.jitter_cv == 0.2
    assert cfg.ppo.epochs == 7 and cfg.collect.synthetic_cpu == (1.0, 2.0)


def test_roundtrip_dict():
    cfg = config_from_dict({"arm": {"link1_length": 0.31}, "eval": {"preset": "sim2real"}})
    assert config_from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("data", [
    {"unknown": {}},
    {"collect": {"n_trial": 3}},
    {"collect": {"provider": "gpu"}},
    {"collect": {"inject_load": 2.0}},
    {"eval": {"preset": "hardware"}},
    {"arm": []},
    {"timestep": {"variant": "sometimes"}},
])
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_collect_steps():
    assert CollectConfig(duration=0.5, nominal_dt=0.001).n_steps == 500
