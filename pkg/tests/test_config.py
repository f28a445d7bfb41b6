import logging

import pytest
from hydra.errors import HydraException

from src.ising_lab.config import config_to_dict, configure_logging, load_config


def test_default_groups_are_composed():
    cfg = load_config()
    assert cfg.run.jobs == 1
    assert cfg.oracle.enumeration_cap == 24
    assert cfg.sample_k.C == 4.0
    assert cfg.annealing.sampler == "exact"
    assert cfg.chains.variant == "local"
    assert cfg.hardness.phase_experiment.runs == 200
    assert cfg.tree.tolerance == pytest.approx(1e-12)


def test_overrides_apply():
    cfg = load_config(["sample_k.C=8", "run.logging_level=DEBUG", "hardness.overrides.m=2"])
    assert cfg.sample_k.C == 8
    assert cfg.run.logging_level == "DEBUG"
    assert cfg.hardness.overrides.m == 2


def test_unknown_key_raises():
    with pytest.raises(HydraException):
        load_config(["sample_k.no_such_key=1"])


def test_config_to_dict():
    record = config_to_dict(load_config())
    assert set(record) >= {"run", "oracle", "tree", "chains", "sample_k", "annealing", "hardness"}
    assert record["oracle"]["extremal"]["n_max"] == 6


def test_configure_logging_sets_level():
    configure_logging("warning")
    assert logging.getLogger().level == logging.WARNING
    configure_logging("not-a-level")
    assert logging.getLogger().level == logging.INFO
