from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pytest

from fracwave.tools.export import (
    format_value,
    read_summary,
    read_table,
    verify_checksum,
    write_summary,
    write_table,
)


def test_format_value() -> None:
    assert format_value(0.1) == "1.0000000000000001e-01"
    assert format_value(np.float64(2.5)) == "2.5000000000000000e+00"
    assert format_value(float("nan")) == "nan"
    assert format_value(float("-inf")) == "-inf"
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(7) == "7"
    assert format_value(None) == ""
    assert format_value("underdamped") == "underdamped"


def test_write_table_layout(tmp_path: Path) -> None:
    path = write_table(
        tmp_path / "simulate.csv",
        [("t", "time"), ("E_norm", "energy^1/2"), ("branch", "")],
        [(0.0, 1.0, "a"), (0.5, 0.25, "b")],
    )
    data = path.read_bytes()
    assert b"\r" not in data
    lines = data.decode("utf-8").splitlines()
    assert lines[0] == "t [time],E_norm [energy^1/2],branch"
    assert lines[1] == "0.0000000000000000e+00,1.0000000000000000e+00,a"
    body = "\n".join(lines[:-1]) + "\n"
    assert lines[-1] == "# sha256=" + hashlib.sha256(body.encode("utf-8")).hexdigest()
    assert verify_checksum(path)

    header, rows = read_table(path)
    assert header[0] == "t [time]"
    assert rows == [lines[1].split(","), lines[2].split(",")]


def test_checksum_detects_tampering(tmp_path: Path) -> None:
    path = write_table(tmp_path / "t.csv", [("x", "1")], [(1.0,), (2.0,)])
    text = path.read_text(encoding="utf-8").replace("2.0000", "3.0000")
    path.write_text(text, encoding="utf-8")
    assert not verify_checksum(path)

    bare = tmp_path / "bare.csv"
    bare.write_text("x [1]\n1\n", encoding="utf-8")
    assert not verify_checksum(bare)


def test_write_table_rejects_ragged_rows(tmp_path: Path) -> None:
    with pytest.raises(ValueError):
        write_table(tmp_path / "t.csv", [("x", "1"), ("y", "1")], [(1.0,)])


def test_summary_is_sorted(tmp_path: Path) -> None:
    path = write_summary(tmp_path / "summary.txt", {"seed": 0, "decay.beta": 0.5, "status": "done"})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:3] == ["decay.beta=5.0000000000000000e-01", "seed=0", "status=done"]
    assert verify_checksum(path)
    assert read_summary(path) == {"decay.beta": "5.0000000000000000e-01", "seed": "0", "status": "done"}


def test_identical_inputs_give_identical_bytes(tmp_path: Path) -> None:
    rows = [(float(t), float(np.exp(-t))) for t in np.linspace(0.0, 1.0, 11)]
    a = write_table(tmp_path / "a.csv", [("t", "time"), ("v", "1")], rows)
    b = write_table(tmp_path / "b.csv", [("t", "time"), ("v", "1")], rows)
    assert a.read_bytes() == b.read_bytes()


def test_numbers_need_a_unit(tmp_path: Path) -> None:
    with pytest.raises(ValueError, match="needs a unit"):
        write_table(tmp_path / "t.csv", [("window", ""), ("x", "1")], [(3, 1.0)])
    with pytest.raises(ValueError, match="needs a unit"):
        write_table(tmp_path / "t.csv", [("x", "")], [(np.float64(0.5),)])
    # labels and flags stay unitless
    path = write_table(tmp_path / "ok.csv", [("window", "1"), ("label", ""), ("pass", "")], [(3, "low", True)])
    header, rows = read_table(path)
    assert header == ["window [1]", "label", "pass"]
    assert rows == [["3", "low", "true"]]
