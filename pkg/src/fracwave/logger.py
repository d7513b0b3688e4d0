from __future__ import annotations

"""
Metrics logging backends for fracwave runs.

Every runner reports scalar progress (per-step energies, fitted constants,
acceptance measurements) through a `BaseLogger`. The CLI uses a
`FileLogger` writing into the bundle; library callers and tests use the
`NullLogger`.

Design principles
-----------------
- Loggers only record; they never influence a computation.
- Output must be reproducible: keys are sorted, no timestamps are written,
  and floats use Python's shortest round-trip repr.
- Diagnostic messages (warnings, refinement notices) go through the standard
  `logging` module instead; this layer is for machine-readable metrics.
"""

import json
import math
import shutil
from pathlib import Path
from typing import Any, Dict, Optional

from .exceptions import ResultsIOError


# ---------------------------------------------------------------------------
# BaseLogger
# ---------------------------------------------------------------------------


class BaseLogger:
    """
    Abstract base class for metrics loggers.

    Attributes
    ----------
    backend_name:
        Short identifier stored in `meta.json`.
    """

    backend_name: str = "base"

    def log_metrics(self, step: Optional[int] = None, **metrics: Any) -> None:
        """
        Record scalar metrics.

        Parameters
        ----------
        step:
            Optional integer step index (time step, window, pair, ...).
        **metrics:
            Scalar key-value pairs.
        """
        raise NotImplementedError

    def log_artifact(self, path: Path, name: Optional[str] = None) -> None:
        """
        Record a file produced outside the bundle.

        Backends that do not support artifacts can implement this as a no-op.
        """
        raise NotImplementedError

    def close(self) -> None:
        """Release held resources. The default is a no-op."""
        return

    def __enter__(self) -> "BaseLogger":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


# ---------------------------------------------------------------------------
# NullLogger
# ---------------------------------------------------------------------------


class NullLogger(BaseLogger):
    """
    Logger that does nothing (library use, unit tests).
    """

    backend_name = "none"

    def log_metrics(self, step: Optional[int] = None, **metrics: Any) -> None:
        return

    def log_artifact(self, path: Path, name: Optional[str] = None) -> None:
        return


# ---------------------------------------------------------------------------
# FileLogger
# ---------------------------------------------------------------------------


def _jsonable(value: Any) -> Any:
    """numpy scalars → Python scalars; non-finite floats → strings."""
    if hasattr(value, "item") and callable(value.item):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


class FileLogger(BaseLogger):
    """
    Metrics logger writing JSON lines into the bundle.

    Metrics are written to:

        <out>/logs/metrics.jsonl

    Each line is a JSON object with sorted keys, for example::

        {"E_norm": 0.8123, "step": 10, "t": 0.1}

    The file is truncated when the logger is created, so re-running into
    the same directory reproduces it exactly. Artifacts are copied into
    the artifacts directory.
    """

    backend_name = "file"

    def __init__(self, logs_dir: Path, artifacts_dir: Path):
        """
        Parameters
        ----------
        logs_dir:
            Directory where `metrics.jsonl` is written.
        artifacts_dir:
            Directory where artifacts are copied.
        """
        self.logs_dir = Path(logs_dir)
        self.artifacts_dir = Path(artifacts_dir)
        self.metrics_path = self.logs_dir / "metrics.jsonl"
        try:
            self._file = self.metrics_path.open("w", encoding="utf-8", newline="\n")
        except OSError as e:
            raise ResultsIOError(f"Failed to open metrics log at {self.metrics_path}: {e}")

    def log_metrics(self, step: Optional[int] = None, **metrics: Any) -> None:
        """
        Append one metrics record as a single JSON line.

        Notes
        -----
        The file is flushed after each write. Non-JSON-serializable values
        raise :class:`TypeError`.
        """
        entry: Dict[str, Any] = {k: _jsonable(v) for k, v in metrics.items()}
        if step is not None:
            entry["step"] = int(step)
        json.dump(entry, self._file, sort_keys=True, ensure_ascii=False)
        self._file.write("\n")
        self._file.flush()

    def log_artifact(self, path: Path, name: Optional[str] = None) -> None:
        """
        Copy an artifact into the artifacts directory.

        Raises
        ------
        FileNotFoundError
            If ``path`` does not exist.
        """
        src = Path(path)
        if not src.exists():
            raise FileNotFoundError(f"Artifact does not exist: {src}")
        shutil.copyfile(src, self.artifacts_dir / (name or src.name))

    def close(self) -> None:
        try:
            self._file.close()
        except Exception:
            # best-effort at shutdown
            pass  # pragma: no cover
