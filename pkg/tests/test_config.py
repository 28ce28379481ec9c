import pytest

from glancenet.config import ExperimentConfig, load_config, parse_config
from glancenet.errors import ConfigError


def test_defaults_valid():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.regime == "standard"


def test_parse_overrides_and_comments():
    cfg = parse_config("""
# experiment
regime=multidomain
label_fraction=0.1
max_epochs=12
mse_rec=1
""")
    assert cfg.regime == "multidomain"
    assert cfg.label_fraction == 0.1
    assert cfg.max_epochs == 12
    assert cfg.mse_rec is True


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as e:
        parse_config("learning_rte=0.1\n")
    assert "learning_rte" in str(e.value)


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("seed=1\nseed=2\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError):
        parse_config("just a line\n")


def test_bad_value_types():
    with pytest.raises(ConfigError):
        parse_config("max_epochs=ten\n")
    with pytest.raises(ConfigError):
        parse_config("mse_rec=yes\n")  # booleans are 0/1


def test_validation_rules():
    with pytest.raises(ConfigError):
        parse_config("regime=bogus\n")
    with pytest.raises(ConfigError):
        parse_config("label_fraction=0\n")
    with pytest.raises(ConfigError):
        parse_config("n_seeds=0\n")


def test_text_roundtrip():
    cfg = parse_config("regime=personalized\nseed=7\ndropout_rate=0.35\n"
                       "no_skip=1\n")
    back = parse_config(cfg.to_text())
    assert back == cfg


def test_regime_config_defaults_per_regime():
    std = parse_config("regime=standard\n").regime_config()
    per = parse_config("regime=personalized\n").regime_config()
    assert std.lr == 1e-4 and std.batch == 8
    assert per.lr == 1e-3 and per.batch == 16
    # explicit values override the per-regime defaults
    custom = parse_config("regime=standard\nlearning_rate=0.01\n"
                          "batch_size=4\n").regime_config()
    assert custom.lr == 0.01 and custom.batch == 4


def test_seed_expansion():
    cfg = parse_config("seed=10\nn_seeds=3\n")
    assert cfg.regime_config().seeds == (10, 11, 12)


def test_scale_construction():
    cfg = parse_config("input_size=64\nn_blocks=4\nbase_channels=16\n")
    s = cfg.scale
    assert s.input_size == 64 and s.n_blocks == 4 and s.base_channels == 16


def test_load_config_file(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text("regime=mixed\nseed=5\n")
    cfg = load_config(str(p))
    assert cfg.regime == "mixed" and cfg.seed == 5
