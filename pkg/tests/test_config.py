"""Tests for sweep files, parameter parsing and logger configuration."""

import logging

import pytest

from overlap_ec.config import (
    apply_logger_config,
    load_sweep_config,
    parse_f_of_n,
    parse_grid,
    parse_lambdas,
    sweep_config_from_dict,
)
from overlap_ec.core import OverlapEcInvalidParametersError

SWEEP_YAML = """
seed: 42
threads: 2
k: 3
q: [0.1, 0.5]
r: [0.05, 0.1]
n: [1000]
runs_per_point: 4
schedule: adaptive-sketch
output: out
logger:
  default: warning
  logs:
    overlap_ec.algo: debug
"""


def test_load_sweep_config(tmp_path):
    path = tmp_path / "sweep.yaml"
    path.write_text(SWEEP_YAML, encoding="utf-8")
    config = load_sweep_config(path)
    assert config.seed == 42
    assert config.threads == 2
    assert config.k == (3,)
    assert config.q == (0.1, 0.5)
    assert config.r == (0.05, 0.1)
    assert config.n == (1000,)
    assert config.runs_per_point == 4
    assert config.schedule == "adaptive-sketch"
    assert config.epsilon_exponent == 0.75
    assert config.f_of_n == "ln2"
    assert config.drain == "drain"
    assert config.logger["logs"] == {"overlap_ec.algo": "debug"}


def test_sweep_defaults():
    config = sweep_config_from_dict({"output": "out"})
    assert config.seed == 0
    assert config.threads == 1
    assert config.k == (3,)
    assert config.q == ()
    assert config.logger == {"default": "info", "logs": {}}


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"output": "out", "q": [1.5]},
        {"output": "out", "r": [0.0]},
        {"output": "out", "k": 2},
        {"output": "out", "runs_per_point": 0},
        {"output": "out", "schedule": "constant"},
        {"output": "out", "epsilon_exponent": 1.0},
        {"output": "out", "f_of_n": "cube"},
        {"output": "out", "seed": -1},
        {"output": "out", "logger": {"default": "loud"}},
    ],
)
def test_sweep_rejects_invalid_values(data):
    with pytest.raises(OverlapEcInvalidParametersError):
        sweep_config_from_dict(data)


def test_sweep_rejects_non_mapping(tmp_path):
    path = tmp_path / "sweep.yaml"
    path.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(OverlapEcInvalidParametersError):
        load_sweep_config(path)


def test_sweep_rejects_bad_yaml(tmp_path):
    path = tmp_path / "sweep.yaml"
    path.write_text("q: [0.1\n", encoding="utf-8")
    with pytest.raises(OverlapEcInvalidParametersError):
        load_sweep_config(path)


def test_parse_f_of_n():
    assert parse_f_of_n("ln2")(100) == pytest.approx(21.2076, abs=1e-4)
    limit = parse_f_of_n("2*sqrt")
    assert limit.kind == "sqrt"
    assert limit(100) == pytest.approx(20.0)
    assert parse_f_of_n("0.5 * ln").scale == 0.5
    for text in ("", "ln3", "0*ln", "-1*ln"):
        with pytest.raises(OverlapEcInvalidParametersError):
            parse_f_of_n(text)


def test_parse_grid():
    assert parse_grid("0.1:0.5:0.1") == (0.1, 0.2, 0.3, 0.4, 0.5)
    assert parse_grid("0.25,0.5") == (0.25, 0.5)
    assert parse_grid("0.3") == (0.3,)
    for text in ("0.5:0.1:0.1", "0.1:0.5:0", "a,b", "0.1:0.5"):
        with pytest.raises(OverlapEcInvalidParametersError):
            parse_grid(text)


def test_parse_lambdas():
    assert parse_lambdas("0.5,0.25,0.25") == (0.5, 0.25, 0.25)
    with pytest.raises(OverlapEcInvalidParametersError):
        parse_lambdas("0.5,0.5")
    with pytest.raises(OverlapEcInvalidParametersError):
        parse_lambdas("1")


def test_apply_logger_config():
    root = logging.getLogger()
    algo = logging.getLogger("overlap_ec.algo")
    saved = (root.level, algo.level)
    try:
        apply_logger_config({"default": "warning", "logs": {"overlap_ec.algo": "debug"}})
        assert root.level == logging.WARNING
        assert algo.level == logging.DEBUG
    finally:
        root.setLevel(saved[0])
        algo.setLevel(saved[1])
