import pytest

from tnnsim.column import LearningMode
from tnnsim.config import ConfigError, ExperimentConfig, dump_config, load_config


def test_defaults():
    cfg = ExperimentConfig()
    assert (cfg.p, cfg.q, cfg.theta, cfg.mode) == (256, 10, 64, LearningMode.RSTDP)
    assert cfg.column().init_weights == 3
    assert cfg.plasticity().mu_capture == 0.6


def test_file_and_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[column]\ntheta = 40\n[run]\nbudget = 10\nlimit = none\n")
    cfg = load_config(path, {"budget": "25", "seed": None})
    assert cfg.theta == 40 and cfg.budget == 25 and cfg.seed == 1


def test_dump_roundtrip(tmp_path):
    cfg = ExperimentConfig(theta=50, init_weights="uniform", shared_lfsr=True)
    path = tmp_path / "c.ini"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


@pytest.mark.parametrize("text", ["[run]\nbogus = 1\n", "[run]\nbudget = 0\n", "[column]\ninit_weights = 9\n",
                                  "not an ini"])
def test_invalid_configs(tmp_path, text):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_config(path)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.ini")
