import json

import pytest

from kfsel.config import RunConfig
from kfsel.errors import ConfigError
from kfsel.qccr import LambdaTable


def test_defaults():
    cfg = RunConfig()
    assert (cfg.T, cfg.N, cfg.K, cfg.D) == (32, 4, 4, 256)
    assert cfg.kernel.tau == 4.0
    assert cfg.target_width == pytest.approx(1.5 / 32)
    assert cfg.lambda_table == LambdaTable(0.2, 0.8, 0.5)
    tc = cfg.train_config()
    assert tc.learning_rate == 1e-2 and tc.epochs == 300


def test_load_file_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"N": 3, "tau": 2.5, "lambda_table": {"descriptive": 0, "temporal": 1, "causal": 2}}))
    cfg = RunConfig.load(path, N=5, epochs=None)
    assert cfg.N == 5 and cfg.tau == 2.5 and cfg.epochs == 300
    assert cfg.lambda_table.causal == 2.0
    assert RunConfig.load(None, **cfg.to_dict()) == cfg


@pytest.mark.parametrize(
    "values,match",
    [
        ({"gamma": 1}, "unknown config keys"),
        ({"N": 40}, "N=40"),
        ({"alpha": 2}, "alpha"),
        ({"solver": "anneal"}, "solver"),
        ({"lambda_override": -1}, "lambda_override"),
        ({"epochs": 0}, "epochs"),
        ({"lambda_table": {"descriptive": 1}}, "missing"),
        ({"workers": 0}, "workers"),
    ],
)
def test_invalid(tmp_path, values, match):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(values))
    with pytest.raises(ConfigError, match=match):
        RunConfig.load(path)


def test_unreadable(tmp_path):
    (tmp_path / "c.json").write_text("[1, 2]")
    with pytest.raises(ConfigError, match="object"):
        RunConfig.load(tmp_path / "c.json")
    with pytest.raises(ConfigError, match="cannot read"):
        RunConfig.load(tmp_path / "none.json")
