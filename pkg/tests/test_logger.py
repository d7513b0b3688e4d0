from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from fracwave.logger import FileLogger, NullLogger


def test_null_logger_does_nothing(tmp_path: Path) -> None:
    logger = NullLogger()

    # log_metrics should not raise
    logger.log_metrics(step=0, E_norm=1.0)

    dummy = tmp_path / "dummy.txt"
    dummy.write_text("hello", encoding="utf-8")

    # log_artifact should not raise (but also not actually copy anything)
    logger.log_artifact(dummy)

    logger.close()


def _dirs(tmp_path: Path):
    logs_dir = tmp_path / "logs"
    artifacts_dir = tmp_path / "artifacts"
    logs_dir.mkdir()
    artifacts_dir.mkdir()
    return logs_dir, artifacts_dir


def test_file_logger_writes_metrics_and_artifacts(tmp_path: Path) -> None:
    logs_dir, artifacts_dir = _dirs(tmp_path)

    with FileLogger(logs_dir=logs_dir, artifacts_dir=artifacts_dir) as logger:
        logger.log_metrics(step=1, t=0.01, E_norm=0.5)
        logger.log_metrics(step=2, t=0.02, E_norm=0.4)

        src = tmp_path / "profile.csv"
        src.write_bytes(b"t [time]\n0\n")
        logger.log_artifact(src)

    lines = (logs_dir / "metrics.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    assert lines[0] == '{"E_norm": 0.5, "step": 1, "t": 0.01}'
    assert json.loads(lines[1])["step"] == 2

    copied = artifacts_dir / src.name
    assert copied.read_bytes() == b"t [time]\n0\n"


def test_file_logger_truncates_on_reopen(tmp_path: Path) -> None:
    logs_dir, artifacts_dir = _dirs(tmp_path)
    for _ in range(2):
        logger = FileLogger(logs_dir, artifacts_dir)
        logger.log_metrics(step=0, E_norm=1.0)
        logger.close()
    lines = (logs_dir / "metrics.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1


def test_file_logger_converts_numpy_and_non_finite(tmp_path: Path) -> None:
    logs_dir, artifacts_dir = _dirs(tmp_path)
    logger = FileLogger(logs_dir, artifacts_dir)
    logger.log_metrics(step=np.int64(3), beta=np.float64(0.25), Q=float("inf"), r=float("nan"))
    logger.close()
    rec = json.loads((logs_dir / "metrics.jsonl").read_text(encoding="utf-8"))
    assert rec == {"step": 3, "beta": 0.25, "Q": "inf", "r": "nan"}


def test_file_logger_missing_artifact(tmp_path: Path) -> None:
    logs_dir, artifacts_dir = _dirs(tmp_path)
    logger = FileLogger(logs_dir, artifacts_dir)
    with pytest.raises(FileNotFoundError):
        logger.log_artifact(tmp_path / "missing.csv")
    logger.close()
