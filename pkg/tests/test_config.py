import pytest
from pydantic import ValidationError

from fluxtube.config import ExperimentConfig, config_schema, dump_config, parse_config
from fluxtube.pipelines import set_path


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.kind == "verify" and cfg.model.name == "p_ip"
    assert len(cfg.alpha.grid()) == 41


def test_roundtrip():
    cfg = parse_config("kind: spectral-flow\nmodel: {name: d_id, params: {mu: 0.5}}\nlattice: {nx: 12, ny: 12}\n")
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("text", [
    "bogus: 1\n",
    "model: {name: graphene}\n",
    "lattice: {nx: 2}\n",
    "window: [1.0, 0.5]\n",
    "version: 7\n",
    "sweep: {parameter: foo.bar, values: [1]}\n",
])
def test_invalid(text):
    with pytest.raises(ValidationError):
        parse_config(text)


def test_non_mapping_rejected():
    with pytest.raises(ValueError):
        parse_config("- 1\n- 2\n")


def test_set_path():
    cfg = ExperimentConfig()
    assert set_path(cfg, "params.mu", 3.0).model.params["mu"] == 3.0
    assert set_path(cfg, "lattice.nx", 16.0).lattice.nx == 16
    assert set_path(cfg, "mu", 0.2).mu == 0.2
    assert set_path(cfg, "disorder.w", 0.3).disorder.w == 0.3


def test_schema_lists_fields():
    assert "kind" in config_schema()["properties"]
