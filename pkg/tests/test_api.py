from __future__ import annotations

import json
from pathlib import Path

import pytest

from fracwave.api import finish_run, run_diagnostics, run_simulate, start_run
from fracwave.config import parse_config
from fracwave.io import load_meta
from fracwave.tools.export import read_summary, read_table, verify_checksum

SMALL = {
    "domain": {"modes_per_axis": 8},
    "nonlinearity": {"kind": "odd_power", "q": 2.0},
    "initial": {"modes": {"1": 1.0, "2": 0.5}},
    "time": {"T": 0.5, "dt": 0.05},
}


def test_start_run_creates_bundle(tmp_path: Path) -> None:
    config = parse_config(SMALL)
    ctx = start_run(config, tmp_path / "bundle", "simulate")

    # bundle layout
    assert ctx.paths.root.exists()
    assert ctx.paths.artifacts.exists()
    assert ctx.paths.logs.exists()
    assert (ctx.paths.root / "meta.json").exists()
    assert (ctx.paths.artifacts / "config.json").exists()
    assert (ctx.paths.logs / "metrics.jsonl").exists()

    meta = load_meta(ctx.paths.root)
    assert meta.status == "running"
    assert meta.run_id == f"simulate-{config.scenario_hash}"
    assert meta.scenario_hash == config.scenario_hash
    assert set(meta.env) == {"platform", "python", "numpy", "scipy"}

    snapshot = json.loads((ctx.paths.artifacts / "config.json").read_text(encoding="utf-8"))
    assert snapshot == json.loads(json.dumps(config.data))
    finish_run(ctx, "done")


def test_simulate_writes_table_and_summary(tmp_path: Path) -> None:
    ctx = start_run(parse_config(SMALL), tmp_path / "bundle", "simulate")
    run_simulate(ctx)
    finish_run(ctx, "done")

    table = ctx.paths.table("simulate")
    assert verify_checksum(table)
    header, rows = read_table(table)
    assert header == ["t [time]", "E_norm [energy^1/2]", "E1_norm [energy^1/2]", "energy_identity_residual [energy]"]
    assert len(rows) == 11
    assert float(rows[0][3]) == 0.0

    summary = read_summary(ctx.paths.summary)
    assert summary["status"] == "done"
    assert summary["simulate.samples"] == "11"
    assert load_meta(ctx.paths.root).outputs == ["simulate"]

    metrics = (ctx.paths.logs / "metrics.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(metrics) == 11


def test_rerun_is_byte_identical(tmp_path: Path) -> None:
    config = parse_config(SMALL)
    roots = []
    for name, threads in (("a", 1), ("b", 4)):
        ctx = start_run(config, tmp_path / name, "simulate", threads=threads)
        run_diagnostics(ctx, ["simulate", "cluster"])
        finish_run(ctx, "done")
        roots.append(ctx.paths.root)
    for rel in ("summary.txt", "meta.json", "artifacts/simulate.csv", "artifacts/cluster.csv"):
        assert (roots[0] / rel).read_bytes() == (roots[1] / rel).read_bytes()
    summary = read_summary(roots[0] / "summary.txt")
    assert summary["cluster.within_sobolev"] == "true"
    assert float(summary["cluster.sobolev_constant"]) > 0.0


def test_unknown_logger_backend(tmp_path: Path) -> None:
    with pytest.raises(ValueError):
        start_run(parse_config(SMALL), tmp_path / "bundle", "simulate", logger_backend="wandb")


def test_start_run_copies_source_config(tmp_path: Path) -> None:
    source = tmp_path / "scenario.yaml"
    source.write_text("time:\n  T: 0.5\n", encoding="utf-8")
    ctx = start_run(parse_config(SMALL), tmp_path / "bundle", "simulate", source=source)
    finish_run(ctx, "done")
    copied = ctx.paths.artifacts / "config.source.yaml"
    assert copied.read_text(encoding="utf-8") == source.read_text(encoding="utf-8")


def test_start_run_warns_when_overwriting_other_scenario(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    out = tmp_path / "bundle"
    finish_run(start_run(parse_config(SMALL), out, "simulate"), "done")

    with caplog.at_level("WARNING", logger="fracwave.api"):
        finish_run(start_run(parse_config(SMALL), out, "simulate"), "done")
    assert not [r for r in caplog.records if "Overwriting" in r.getMessage()]

    other = dict(SMALL, time={"T": 1.0, "dt": 0.05})
    with caplog.at_level("WARNING", logger="fracwave.api"):
        ctx = start_run(parse_config(other), out, "simulate")
    finish_run(ctx, "done")
    assert any("Overwriting" in r.getMessage() for r in caplog.records)
    assert load_meta(out).scenario_hash == parse_config(other).scenario_hash


def test_start_run_tolerates_corrupt_meta(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    out = tmp_path / "bundle"
    out.mkdir()
    (out / "meta.json").write_text("{not json", encoding="utf-8")
    with caplog.at_level("WARNING", logger="fracwave.api"):
        ctx = start_run(parse_config(SMALL), out, "simulate")
    finish_run(ctx, "done")
    assert any("unreadable meta.json" in r.getMessage() for r in caplog.records)
    assert load_meta(out).status == "done"
