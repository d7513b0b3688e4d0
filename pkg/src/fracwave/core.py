from __future__ import annotations

"""
Core data structures for fracwave report bundles.

This module defines the minimal in-memory representation of one CLI run:

- `RunPaths`  : concrete filesystem locations under the `--out` directory.
- `RunMeta`   : machine-readable metadata stored as `meta.json`.
- `RunContext`: the single object handed to the diagnostic runners, bundling
                paths, validated config, metadata, and metrics logger.

Design principles
-----------------
- Keep this module free of heavy dependencies (no numerics, no I/O).
  All disk access lives in `io.py` and orchestration in `api.py`.
- Use dataclasses for clarity and easy JSON serialization.
- No timestamps and no thread counts: two runs with the same config and
  seed must produce byte-identical bundles.

Typical usage
-------------

    from fracwave.core import RunPaths, RunMeta

    paths = RunPaths.create(out_dir)
    meta = RunMeta(run_id=run_id, subcommand="simulate", scenario_hash=h, seed=0)
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, Optional

if TYPE_CHECKING:  # pragma: no cover
    from .config import RunConfig
    from .logger import BaseLogger


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


@dataclass
class RunPaths:
    """
    Collection of paths for a single report bundle.

        <out>/
          meta.json
          summary.txt
          artifacts/
            config.json
            <diagnostic>.csv
          logs/
            metrics.jsonl

    Attributes
    ----------
    root:
        Bundle root (the `--out` directory).
    artifacts:
        Directory for the config snapshot and the CSV tables.
    logs:
        Directory for the metrics log.
    """

    root: Path
    artifacts: Path
    logs: Path

    @classmethod
    def create(cls, root: Path) -> "RunPaths":
        """
        Create the bundle layout under `root` (existing directories are kept).
        """
        root = Path(root).resolve()
        artifacts = root / "artifacts"
        logs = root / "logs"
        for p in (root, artifacts, logs):
            p.mkdir(parents=True, exist_ok=True)
        return cls(root=root, artifacts=artifacts, logs=logs)

    @property
    def summary(self) -> Path:
        return self.root / "summary.txt"

    def table(self, name: str) -> Path:
        return self.artifacts / f"{name}.csv"


# ---------------------------------------------------------------------------
# Metadata
# ---------------------------------------------------------------------------


@dataclass
class RunMeta:
    """
    Metadata of one bundle, stored as `meta.json`.

    Attributes
    ----------
    run_id:
        Deterministic identifier (see :func:`fracwave.ids.generate_run_id`).
    subcommand:
        CLI subcommand that produced the bundle.
    scenario_hash:
        12-hex digest of the validated config.
    seed:
        Effective RNG seed.
    version:
        fracwave version string.
    status:
        "running", "done", "failed" or "numerical_failure".
    env:
        Coarse environment snapshot (platform, python, numpy, scipy).
    outputs:
        Names of the tables written to `artifacts/`.
    extra:
        Free-form dictionary for runner-specific fields.
    """

    run_id: str
    subcommand: str
    scenario_hash: str
    seed: int
    version: str = "0.0.0"
    status: str = "running"
    env: Dict[str, Any] = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    extra: Dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------


@dataclass
class RunContext:
    """
    Everything a diagnostic runner needs.

    Attributes
    ----------
    paths:
        `RunPaths` of the bundle.
    config:
        Validated `RunConfig`.
    meta:
        `RunMeta` describing the run.
    logger:
        Metrics logger (`BaseLogger` implementation).
    threads:
        Worker count for ensembles (never written to the bundle).
    summary:
        key=value pairs collected by the runners for `summary.txt`.
    cache:
        Objects shared between runners of one invocation (e.g. the ensemble).
    """

    paths: RunPaths
    config: "RunConfig"
    meta: RunMeta
    logger: "BaseLogger"
    threads: Optional[int] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    cache: Dict[str, Any] = field(default_factory=dict, repr=False)

    @property
    def run_id(self) -> str:
        return self.meta.run_id
