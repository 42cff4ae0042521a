import pytest

from oscsim.config_io import (
    ConfigError,
    PRESET_NAMES,
    apply_overrides,
    load_config,
    parse_config,
    save_config,
    serialize_config,
)
from oscsim.core import RngStream, ScenarioConfig, validate_config


def test_preset_names():
    assert PRESET_NAMES == ("fast_fashion", "electronics", "perishables")


def test_load_fast_fashion_matches_defaults():
    assert load_config("fast_fashion") == ScenarioConfig()


def test_load_electronics():
    cfg = load_config("electronics")
    assert cfg.sigma == 0.70
    assert cfg.theta_p == 3.5
    assert cfg.perishable is False


def test_load_perishables():
    cfg = load_config("perishables")
    assert cfg.perishable is True
    assert cfg.gamma == 0.90
    assert cfg.baseline_trust == 0.75


def test_unknown_preset_names_alternatives():
    with pytest.raises(ConfigError) as exc:
        load_config("retail")
    msg = str(exc.value)
    for name in PRESET_NAMES:
        assert name in msg


def test_overrides():
    cfg = load_config("electronics", overrides=["sigma=0.9", "seed=12"])
    assert cfg.sigma == 0.9
    assert cfg.seed == 12
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), ["sigma:0.9"])  # not key=value
    with pytest.raises(ConfigError):
        apply_overrides(ScenarioConfig(), ["no_such_key=1"])


def test_override_validation_applied():
    with pytest.raises(ConfigError):
        load_config("fast_fashion", overrides=["sigma=-1.0"])


def test_roundtrip_default():
    assert parse_config(serialize_config(ScenarioConfig())) == ScenarioConfig()


def test_roundtrip_random_valid_configs():
    rng = RngStream(77).child("cfg")
    for _ in range(25):
        cfg = ScenarioConfig(
            n_suppliers=int(rng.integers(1, 6)),
            horizon_T=int(rng.integers(5, 200)),
            mu=float(rng.uniform(-0.1, 0.1)),
            sigma=float(rng.uniform(0.0, 1.4)),
            perishable=bool(rng.uniform() < 0.5),
            theta_t=float(rng.uniform(0.0, 1.0)),
            baseline_trust=float(rng.uniform(0.1, 0.9)),
            trust_rule="bayes" if rng.uniform() < 0.5 else "smoothed",
            shock_probability=float(rng.uniform(0.0, 1.0)),
            q_max_range=(3, int(rng.integers(3, 12))),
            seed=int(rng.integers(0, 10_000)),
        )
        assert validate_config(cfg).ok
        assert parse_config(serialize_config(cfg)) == cfg


def test_file_roundtrip(tmp_path):
    path = tmp_path / "scenario.ini"
    cfg = ScenarioConfig(sigma=0.45, seed=31)
    save_config(cfg, path)
    assert load_config(path) == cfg
    text = path.read_text()
    assert text.startswith("[meta]")
    assert "rng_algorithm" in text


def test_parse_errors():
    with pytest.raises(ConfigError):
        parse_config("[network]\nn_suppliers = many\n")
    with pytest.raises(ConfigError):
        parse_config("[network]\nwidgets = 3\n")
    with pytest.raises(ConfigError):
        parse_config("[factory]\nn_suppliers = 3\n")


def test_missing_file():
    with pytest.raises(ConfigError) as exc:
        load_config("/no/such/file.ini")
    assert "presets" in str(exc.value)
