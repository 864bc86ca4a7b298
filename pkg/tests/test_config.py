import pytest

from pathclass.config import ConfigError, ExperimentConfig


def test_round_trip_is_lossless():
    cfg = ExperimentConfig(scenario="zeno", x0=-17.25, U=(0.5, 2.0), seeds=(3, 9), zeno_shapes=("boxcar",))
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back == cfg
    assert back.digest == cfg.digest


def test_comments_and_defaults():
    cfg = ExperimentConfig.from_text("# header\n\nt = 5   # shorter run\n")
    assert cfg.t == 5.0 and cfg.k0 == ExperimentConfig().k0


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        ExperimentConfig.from_text("speed = 3\n")


def test_bad_value_rejected():
    with pytest.raises(ConfigError, match="bad value"):
        ExperimentConfig.from_text("n_x = many\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("just text\n")


def test_digest_tracks_content():
    assert ExperimentConfig().digest != ExperimentConfig(t=9.0).digest


@pytest.mark.parametrize(
    "changes",
    [
        {"n_x": 0},
        {"n_x": 2048},
        {"scenario": "nope"},
        {"sigma": -1.0},
        {"x_min": -30.0},
        {"x_min": -90.0},
        {"n_x": 257},
        {"alpha": 0.5},
        {"filter_shape": "triangle"},
        {"window_factor": 0.5},
        {"scenario": "zeno", "zeno_alphas": (1.0, 10.0)},
        {"scenario": "absorb", "U": (-1.0,)},
        {"scenario": "firstcross", "leak_times": (0.0, 1.0)},
        {"scenario": "oracle", "dim": 7},
        {"scenario": "oracle", "dim": 4, "K": 12},
    ],
)
def test_validation_rejects(changes):
    with pytest.raises(ConfigError):
        ExperimentConfig().replace(**changes).validate()


def test_defaults_validate():
    for s in ("traversal", "paradox", "zeno", "absorb", "firstcross", "oracle"):
        ExperimentConfig(scenario=s).validate()
