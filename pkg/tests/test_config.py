from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from fracwave.config import load_run_config, parse_config
from fracwave.exceptions import ConfigLoadError
from fracwave.io import load_config, snapshot_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_load_config_from_mapping() -> None:
    cfg = load_config({"damping": {"gamma": 2.0}})
    assert cfg["damping"]["gamma"] == 2.0
    assert load_config(None) == {}


def test_load_config_from_json_file(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    data = {"damping": {"gamma": 2.0, "alpha": 0.1}, "time": {"T": 1.0}}
    path.write_text(json.dumps(data), encoding="utf-8")

    assert load_config(path) == data


def test_load_config_from_ini_file(tmp_path: Path) -> None:
    path = tmp_path / "config.ini"
    path.write_text(
        "[domain]\nlengths = [1.0, 2.0]\ndims = 2\n\n[run]\nquick = true\noutputs = [simulate, cluster]\n",
        encoding="utf-8",
    )
    cfg = load_config(path)
    assert cfg["domain"] == {"lengths": [1.0, 2.0], "dims": 2}
    assert cfg["run"]["quick"] is True
    assert cfg["run"]["outputs"] == ["simulate", "cluster"]


def test_load_config_missing_file(tmp_path: Path) -> None:
    with pytest.raises(ConfigLoadError):
        load_config(tmp_path / "missing.yaml")


def test_load_config_rejects_unknown_suffix_and_bad_json(tmp_path: Path) -> None:
    toml = tmp_path / "config.toml"
    toml.write_text("x = 1\n", encoding="utf-8")
    with pytest.raises(ConfigLoadError):
        load_config(toml)

    broken = tmp_path / "config.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigLoadError):
        load_config(broken)

    listing = tmp_path / "config.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigLoadError):
        load_config(listing)


def test_snapshot_config_to_json(tmp_path: Path) -> None:
    dest = tmp_path / "snapshot.json"
    cfg = {"time": {"dt": 0.01, "T": 1.0}, "damping": {"alpha": 0.25}}

    snapshot_config(cfg, dest)
    text = dest.read_text(encoding="utf-8")

    assert json.loads(text) == cfg
    # sorted keys
    assert text.index('"damping"') < text.index('"time"')


def test_snapshot_and_load_yaml_if_available(tmp_path: Path) -> None:
    yaml = pytest.importorskip("yaml")

    dest = tmp_path / "snapshot.yaml"
    cfg = {"damping": {"gamma": 1.0, "alpha": 0.25}, "forcing": "zero"}

    snapshot_config(cfg, dest)
    assert yaml.safe_load(dest.read_text(encoding="utf-8")) == cfg

    # Round-trip load_config from YAML file
    assert load_config(dest) == cfg


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def test_parse_config_defaults() -> None:
    config = parse_config({})
    data = config.data
    assert data["domain"] == {"dims": 1, "lengths": [1.0], "modes_per_axis": 64, "oversample": 2}
    assert data["damping"] == {"gamma": 1.0, "alpha": 0.25}
    assert data["nonlinearity"]["kind"] == "odd_power"
    assert data["forcing"] == "zero"
    assert data["initial"]["modes"] == {"1": 1.0}
    assert data["time"] == {"T": 10.0, "dt": 0.01, "stride": 1}
    assert config.seed == 0
    assert config.outputs == ("simulate",)
    assert config.transient == pytest.approx(2.5)
    assert not config.quick
    assert config.spectrum.count == 64
    assert config.scenario.u0.coeffs[0] == 1.0


def test_parse_config_multidimensional_defaults() -> None:
    config = parse_config({"domain": {"dims": 3}})
    assert config.spectrum.count == 8**3
    assert config.data["initial"]["modes"] == {"1,1,1": 1.0}


def test_parse_config_rejects_unknown_section_and_key() -> None:
    with pytest.raises(ConfigLoadError, match="Unknown config section"):
        parse_config({"solver": {}})
    with pytest.raises(ConfigLoadError, match=r"Unknown key\(s\) in \[time\]"):
        parse_config({"time": {"steps": 10}})


def test_parse_config_rejects_alpha_outside_interval() -> None:
    with pytest.raises(ConfigLoadError) as info:
        parse_config({"damping": {"alpha": 0.7}})
    assert "(0, 0.5)" in str(info.value)


@pytest.mark.parametrize(
    "raw",
    [
        {"nonlinearity": {"q": 4.5}},
        {"nonlinearity": {"kind": "custom_polynomial"}},
        {"nonlinearity": {"kind": "odd_power", "coefficients": [0.0, 1.0]}},
        {"run": {"outputs": ["simulate", "spectrum"]}},
        {"run": {"seed": -1}},
        {"time": {"T": 0.001, "dt": 0.01}},
        {"domain": {"dims": 4}},
        {"domain": {"dims": 2, "lengths": [1.0]}},
        {"damping": {"gamma": "fast"}},
        {"forcing": "constant"},
        {"initial": {"modes": {"65": 1.0}}},
    ],
)
def test_parse_config_rejects_invalid_values(raw: dict) -> None:
    with pytest.raises(ConfigLoadError):
        parse_config(raw)


def test_odd_power_below_one_is_a_config_error() -> None:
    with pytest.raises(ConfigLoadError, match="Invalid configuration"):
        parse_config({"nonlinearity": {"kind": "odd_power", "q": 0.5}})


def test_parse_config_overrides_and_numeric_strings() -> None:
    config = parse_config(
        {"damping": {"gamma": "1.5"}, "run": {"seed": "7", "quick": "no"}},
        seed=11,
        quick=True,
    )
    assert config.scenario.damping.gamma == 1.5
    assert config.seed == 11
    assert config.quick


def test_parse_config_forcing_mapping() -> None:
    config = parse_config({"domain": {"dims": 2, "modes_per_axis": 4}, "forcing": {"1,2": 3.0, "2, 1": -1.0}})
    assert config.data["forcing"] == {"1,2": 3.0, "2,1": -1.0}
    g = config.scenario.forcing
    assert g.coeffs[config.spectrum.index_of((1, 2))] == 3.0
    assert g.coeffs[config.spectrum.index_of((2, 1))] == -1.0


def test_random_initial_data_follows_seed() -> None:
    raw = {"initial": {"generator": "random_seeded", "amplitude": 2.0}, "domain": {"modes_per_axis": 16}}
    a = parse_config(raw, seed=3)
    b = parse_config(raw, seed=3)
    c = parse_config(raw, seed=4)
    assert np.array_equal(a.scenario.u0.coeffs, b.scenario.u0.coeffs)
    assert not np.array_equal(a.scenario.u0.coeffs, c.scenario.u0.coeffs)
    lam = a.spectrum.eigenvalues
    size = np.sqrt(np.dot(lam, a.scenario.u0.coeffs**2) + np.dot(a.scenario.u1.coeffs, a.scenario.u1.coeffs))
    assert size == pytest.approx(2.0)


def test_rough_data_default_exponent() -> None:
    config = parse_config({"initial": {"generator": "rough_decay"}, "domain": {"dims": 2}})
    assert config.data["initial"]["exponent"] == pytest.approx(-1.0)


def test_scenario_hash_is_deterministic() -> None:
    a = parse_config({"damping": {"gamma": 2.0}})
    b = parse_config({"damping": {"gamma": 2.0}})
    assert a.scenario_hash == b.scenario_hash
    assert len(a.scenario_hash) == 12
    assert parse_config({"damping": {"gamma": 2.0}}, seed=1).scenario_hash != a.scenario_hash


@pytest.mark.parametrize("name", ["cubic_1d.yaml", "linear_cube.yaml", "attractor_1d.yaml", "rough_1d.ini"])
def test_shipped_configs_load(name: str) -> None:
    config = load_run_config(CONFIGS / name)
    assert config.outputs
    assert config.scenario.n_steps >= 1


def test_load_run_config_from_ini(tmp_path: Path) -> None:
    path = tmp_path / "forced.ini"
    path.write_text(
        "[domain]\nmodes_per_axis = 8\n\n[forcing]\n1 = 2.0\n3 = 0.5\n\n[time]\nT = 1.0\ndt = 0.1\n",
        encoding="utf-8",
    )
    config = load_run_config(path)
    assert config.data["forcing"] == {"1": 2.0, "3": 0.5}
    assert config.scenario.forcing.coeffs[2] == 0.5
